#include "dts/training.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <sstream>
#include <string_view>
#include <unordered_map>

#include "dts/adam.hpp"
#include "dts/encoder.hpp"
#include "dts/error.hpp"
#include "dts/losses.hpp"
#include "dts/rng.hpp"

namespace dts {

namespace {

// Salts keep the split, the init and the per-epoch batch shuffles on
// independent streams of one user-visible seed.
constexpr std::uint64_t kSplitSalt = 0xa24baed4963ee407ULL;
constexpr std::uint64_t kInitSalt = 0x9fb21c651e98df25ULL;

// One usable training pair with everything the batch loop needs resolved.
struct PairSlot {
    const VideoTextPair* pair = nullptr;
    const std::vector<Vec>* frames = nullptr;
    std::size_t token_index = 0;
    const LabelVector* labels = nullptr;
};

}  // namespace

void TrainConfig::validate() const {
    if (epochs < 1) throw ValueError("TrainConfig: epochs must be >= 1");
    if (batch_size < 2) throw ValueError("TrainConfig: batch_size must be >= 2");
    if (!std::isfinite(learning_rate) || learning_rate < 0.0)
        throw ValueError("TrainConfig: learning_rate must be finite and >= 0");
    LossHyperParams{margin, lambda, prediction_clip}.validate();
    if (!std::isfinite(matching_weight) || matching_weight < 0.0 ||
        !std::isfinite(classification_weight) || classification_weight < 0.0)
        throw ValueError("TrainConfig: task weights must be finite and >= 0");
    if (matching_weight == 0.0 && classification_weight == 0.0)
        throw ValueError("TrainConfig: at least one task weight must be positive");
    if (!(validation_fraction >= 0.0 && validation_fraction < 1.0))
        throw ValueError("TrainConfig: validation_fraction must lie in [0, 1)");
    if (early_stop_patience < 1) throw ValueError("TrainConfig: early_stop_patience must be >= 1");
}

double mean_reciprocal_rank(const Tensor2& item_embeddings, std::span<const std::string> item_ids,
                            const Tensor2& query_embeddings,
                            std::span<const std::string> positive_ids) {
    if (item_embeddings.rows != static_cast<int>(item_ids.size()))
        throw ShapeError("mean_reciprocal_rank: item rows and ids disagree");
    if (query_embeddings.rows != static_cast<int>(positive_ids.size()))
        throw ShapeError("mean_reciprocal_rank: query rows and positive ids disagree");
    if (query_embeddings.rows == 0) throw ValueError("mean_reciprocal_rank: no queries");

    std::unordered_map<std::string_view, int> row_of;
    row_of.reserve(item_ids.size());
    for (std::size_t i = 0; i < item_ids.size(); ++i)
        if (!row_of.emplace(item_ids[i], static_cast<int>(i)).second)
            throw ValueError("mean_reciprocal_rank: duplicate item id " + item_ids[i]);

    double sum = 0.0;
    for (int q = 0; q < query_embeddings.rows; ++q) {
        const auto hit = row_of.find(positive_ids[static_cast<std::size_t>(q)]);
        if (hit == row_of.end())
            throw ValueError("mean_reciprocal_rank: positive id not among items: " +
                             positive_ids[static_cast<std::size_t>(q)]);
        const std::vector<double> scores = cosine_scores(item_embeddings, query_embeddings.row(q));
        const std::size_t pos = static_cast<std::size_t>(hit->second);
        // Rank under the canonical result order: higher score first, ties
        // by ascending id.
        long rank = 1;
        for (std::size_t i = 0; i < scores.size(); ++i) {
            if (i == pos) continue;
            if (scores[i] > scores[pos] ||
                (scores[i] == scores[pos] && item_ids[i] < item_ids[pos]))
                ++rank;
        }
        sum += 1.0 / static_cast<double>(rank);
    }
    return sum / query_embeddings.rows;
}

double validation_mrr(ModelParameters& params, const EncoderConfig& config, const Dataset& data,
                      const Vocabulary& vocab, std::span<const VideoTextPair> pairs) {
    set_batchnorm_mode(params, BatchNormMode::infer);

    std::vector<std::string> ids;
    std::vector<const std::vector<Vec>*> frames;
    for (const auto& [id, video] : data.videos) {
        if (video.empty()) continue;  // nothing to embed
        ids.push_back(id);
        frames.push_back(&video);
    }
    if (ids.empty()) throw ValueError("validation_mrr: no videos with frames");

    Tensor2 items(static_cast<int>(ids.size()), config.common_dim);
    for (std::size_t i = 0; i < frames.size(); ++i) {
        const EncodeResult encoded = encode_visual(*frames[i], params, config);
        std::copy(encoded.embedding.begin(), encoded.embedding.end(),
                  items.row(static_cast<int>(i)).begin());
    }

    std::vector<Vec> queries;
    std::vector<std::string> positives;
    for (const VideoTextPair& pair : pairs) {
        if (data.videos.at(pair.video_id).empty()) continue;
        const std::string& caption = data.captions.at(pair.video_id).at(pair.caption_index);
        const std::vector<int> tokens = vocab.map_tokens(tokenize(caption));
        if (tokens.empty()) continue;
        queries.push_back(encode_text(tokens, params, config).embedding);
        positives.push_back(pair.video_id);
    }
    if (queries.empty()) return 0.0;

    Tensor2 query_mat(static_cast<int>(queries.size()), config.common_dim);
    for (std::size_t i = 0; i < queries.size(); ++i)
        std::copy(queries[i].begin(), queries[i].end(),
                  query_mat.row(static_cast<int>(i)).begin());
    return mean_reciprocal_rank(items, ids, query_mat, positives);
}

TrainResult train(const TrainConfig& config, EncoderConfig encoder_config, const Dataset& data,
                  const Vocabulary& vocab) {
    config.validate();
    if (vocab.size() == 0) throw ValueError("train: empty vocabulary");
    data.validate();
    if (encoder_config.vocab_size == 0) encoder_config.vocab_size = vocab.size();
    if (encoder_config.vocab_size != vocab.size())
        throw ValueError("train: encoder vocab_size disagrees with the vocabulary");
    encoder_config.validate();
    if (data.frame_dim() != encoder_config.frame_feature_dim) {
        std::ostringstream msg;
        msg << "train: dataset frame dim " << data.frame_dim() << " but encoder expects "
            << encoder_config.frame_feature_dim;
        throw ValueError(msg.str());
    }

    TrainResult result;

    // Resolve each pair up front; captions with no in-vocabulary tokens
    // cannot be encoded and are dropped with a count the caller can report.
    std::vector<std::vector<int>> token_store;
    std::vector<PairSlot> slots;
    std::map<std::string, LabelVector> labels_by_video;
    for (const VideoTextPair& pair : data.pairs) {
        const std::vector<Vec>& frames = data.videos.at(pair.video_id);
        if (frames.empty()) continue;
        const std::string& caption = data.captions.at(pair.video_id).at(pair.caption_index);
        std::vector<int> tokens = vocab.map_tokens(tokenize(caption));
        if (tokens.empty()) {
            ++result.empty_token_pairs_dropped;
            continue;
        }
        auto [label_it, inserted] = labels_by_video.try_emplace(pair.video_id);
        if (inserted) label_it->second = caption_labels(data.captions.at(pair.video_id), vocab);
        PairSlot slot;
        slot.pair = &pair;
        slot.frames = &frames;
        slot.token_index = token_store.size();
        slot.labels = &label_it->second;
        token_store.push_back(std::move(tokens));
        slots.push_back(slot);
    }
    if (slots.size() < 2) throw ValueError("train: fewer than two usable pairs");

    // Holdout split. The shuffle is a fixed function of the seed, so the
    // same corpus and seed always produce the same partition.
    std::vector<std::size_t> order(slots.size());
    std::iota(order.begin(), order.end(), 0);
    Rng split_rng(config.seed ^ kSplitSalt);
    split_rng.shuffle(order);
    auto n_val = static_cast<std::size_t>(
        std::llround(config.validation_fraction * static_cast<double>(slots.size())));
    if (n_val > slots.size() - 2) n_val = slots.size() - 2;  // keep at least one rankable batch
    std::vector<VideoTextPair> val_pairs;
    val_pairs.reserve(n_val);
    for (std::size_t i = 0; i < n_val; ++i) val_pairs.push_back(*slots[order[i]].pair);
    const std::vector<std::size_t> train_idx(order.begin() + static_cast<std::ptrdiff_t>(n_val),
                                             order.end());
    result.train_pairs = train_idx.size();
    result.validation_pairs = val_pairs.size();

    Rng init_rng(config.seed ^ kInitSalt);
    ModelParameters params = init_parameters(encoder_config, init_rng);
    set_batchnorm_mode(params, BatchNormMode::train);

    // One flat Adam state across every trainable block, in visitor order.
    std::vector<std::span<double>> param_slots;
    visit_trainable(params, [&](std::string_view, std::span<double> values) {
        param_slots.push_back(values);
    });
    std::size_t total = 0;
    for (const auto& slot : param_slots) total += slot.size();
    AdamState adam(total, config.learning_rate);
    Vec flat_params(total);
    Vec flat_grads(total);

    const bool matching_on = config.matching_weight != 0.0;
    const bool classification_on = config.classification_weight != 0.0;
    double best_score = -std::numeric_limits<double>::infinity();
    ModelParameters best_params = params;
    int best_epoch = 0;
    int stale = 0;

    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        const BatchPlan plan =
            make_batch_plan(train_idx.size(), config.batch_size, config.seed, epoch);
        const auto batches = plan_batches(plan);
        EpochStats stats;
        stats.epoch = epoch;
        double match_sum = 0.0;
        double cls_sum = 0.0;
        double combined_sum = 0.0;

        for (std::size_t b = 0; b < batches.size(); ++b) {
            const std::span<const std::size_t> batch = batches[b];
            const int bsz = static_cast<int>(batch.size());
            if (bsz < 2) {
                ++stats.batches_skipped;  // train-mode BN needs two rows
                continue;
            }

            std::vector<const std::vector<Vec>*> videos(batch.size());
            std::vector<std::vector<int>> tokens(batch.size());
            std::vector<const LabelVector*> labels(batch.size());
            std::vector<int> groups(batch.size());
            std::map<std::string_view, int> group_of;
            for (std::size_t i = 0; i < batch.size(); ++i) {
                const PairSlot& slot = slots[train_idx[batch[i]]];
                videos[i] = slot.frames;
                tokens[i] = token_store[slot.token_index];
                labels[i] = slot.labels;
                groups[i] = group_of.try_emplace(slot.pair->video_id,
                                                 static_cast<int>(group_of.size()))
                                .first->second;
            }
            if (matching_on && group_of.size() < 2) {
                ++stats.batches_skipped;  // one video only: nothing to mine
                continue;
            }

            VisualBatchCache vcache;
            const Tensor2 phi = encode_visual_batch(videos, params, encoder_config, &vcache);

            double matching = 0.0;
            RankingLossResult rank;
            TextBatchCache tcache;
            if (matching_on) {
                const Tensor2 tau = encode_text_batch(tokens, params, encoder_config, &tcache);
                rank = ranking_loss(phi, tau, config.margin, groups);
                matching = rank.loss;
            }

            double classification = 0.0;
            DecoderCache dcache;
            Tensor2 d_logits;
            if (classification_on) {
                const Tensor2 probs = decode_batch(phi, params, &dcache);
                d_logits = Tensor2(probs.rows, probs.cols);
                const double row_weight = config.classification_weight / bsz;
                for (int r = 0; r < probs.rows; ++r) {
                    const auto& label = *labels[static_cast<std::size_t>(r)];
                    const ClassSensitiveResult cs =
                        config.plain_bce
                            ? plain_bce_loss(probs.row(r), label, config.prediction_clip)
                            : class_sensitive_loss(probs.row(r), label, config.lambda,
                                                   config.prediction_clip);
                    classification += cs.loss / bsz;
                    auto out = d_logits.row(r);
                    for (int c = 0; c < probs.cols; ++c) out[c] = row_weight * cs.d_logits[c];
                }
            }

            if (!std::isfinite(matching) || !std::isfinite(classification)) {
                std::ostringstream msg;
                msg << "train: non-finite loss at epoch " << epoch << " batch " << b
                    << " (matching=" << matching << ", classification=" << classification << ")";
                throw ValueError(msg.str());
            }

            ModelParameters grads = zero_parameters(encoder_config);
            Tensor2 d_phi(bsz, encoder_config.common_dim);
            if (classification_on) d_phi = decode_batch_backward(dcache, params, d_logits, grads);
            if (matching_on)
                for (std::size_t i = 0; i < d_phi.data.size(); ++i)
                    d_phi.data[i] += config.matching_weight * rank.d_video.data[i];
            encode_visual_batch_backward(vcache, params, encoder_config, d_phi, grads);
            if (matching_on) {
                Tensor2 d_tau = rank.d_text;
                scale_inplace(d_tau, config.matching_weight);
                encode_text_batch_backward(tcache, params, encoder_config, d_tau, grads);
            }

            std::vector<std::span<double>> grad_slots;
            grad_slots.reserve(param_slots.size());
            visit_trainable(grads, [&](std::string_view, std::span<double> values) {
                grad_slots.push_back(values);
            });
            std::size_t offset = 0;
            for (std::size_t i = 0; i < param_slots.size(); ++i) {
                std::copy(param_slots[i].begin(), param_slots[i].end(),
                          flat_params.begin() + static_cast<std::ptrdiff_t>(offset));
                std::copy(grad_slots[i].begin(), grad_slots[i].end(),
                          flat_grads.begin() + static_cast<std::ptrdiff_t>(offset));
                offset += param_slots[i].size();
            }
            try {
                adam_step(flat_params, flat_grads, adam);
            } catch (const ValueError& err) {
                std::ostringstream msg;
                msg << "train: epoch " << epoch << " batch " << b << ": " << err.what();
                throw ValueError(msg.str());
            }
            offset = 0;
            for (auto& slot : param_slots) {
                std::copy_n(flat_params.begin() + static_cast<std::ptrdiff_t>(offset), slot.size(),
                            slot.begin());
                offset += slot.size();
            }

            match_sum += matching;
            cls_sum += classification;
            combined_sum += combined_loss(config.matching_weight * matching,
                                          config.classification_weight * classification);
            ++stats.batches;
        }

        if (stats.batches > 0) {
            const auto n = static_cast<double>(stats.batches);
            stats.matching_loss = match_sum / n;
            stats.classification_loss = cls_sum / n;
            stats.combined_loss = combined_sum / n;
        }

        if (!val_pairs.empty()) {
            stats.validation_score = validation_mrr(params, encoder_config, data, vocab, val_pairs);
            set_batchnorm_mode(params, BatchNormMode::train);
        } else {
            // No holdout: selection falls back to the training loss.
            stats.validation_score = -stats.combined_loss;
        }
        result.epochs.push_back(stats);

        if (stats.validation_score > best_score) {
            best_score = stats.validation_score;
            best_params = params;
            best_epoch = epoch;
            stale = 0;
        } else if (++stale >= config.early_stop_patience) {
            break;
        }
    }

    set_batchnorm_mode(best_params, BatchNormMode::infer);
    result.best_epoch = best_epoch;
    result.best = Checkpoint{encoder_config, vocab.hash(), best_epoch, best_score,
                             std::move(best_params)};
    if (!config.checkpoint_path.empty()) save_checkpoint(config.checkpoint_path, result.best);
    return result;
}

}  // namespace dts
