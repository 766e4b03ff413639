#include "dts/encoder.hpp"

#include <sstream>

#include "dts/activations.hpp"
#include "dts/error.hpp"

namespace dts {

namespace {

Vec mean_of(std::span<const Vec> vectors) {
    Vec mean(vectors.front().size(), 0.0);
    for (const Vec& v : vectors)
        for (std::size_t i = 0; i < mean.size(); ++i) mean[i] += v[i];
    for (double& m : mean) m /= static_cast<double>(vectors.size());
    return mean;
}

MultiLevelFeature assemble_levels(Vec level1, const std::vector<Vec>& gru_outputs,
                                  Vec level3) {
    MultiLevelFeature f;
    f.level1 = std::move(level1);
    f.level2 = mean_of(gru_outputs);
    f.level3 = std::move(level3);
    f.concatenated.reserve(f.level1.size() + f.level2.size() + f.level3.size());
    f.concatenated.insert(f.concatenated.end(), f.level1.begin(), f.level1.end());
    f.concatenated.insert(f.concatenated.end(), f.level2.begin(), f.level2.end());
    f.concatenated.insert(f.concatenated.end(), f.level3.begin(), f.level3.end());
    return f;
}

// Sequence tower shared by both modalities: biGRU then conv bank.
MultiLevelFeature run_tower(std::span<const Vec> sequence, Vec level1,
                            const BiGruParams& gru_params, const ConvBankParams& conv_params,
                            SequenceCache* cache, EncodeStats* stats) {
    std::size_t skips = 0;
    std::vector<Vec> gru_outputs =
        bigru_forward(sequence, gru_params, cache ? &cache->gru : nullptr);
    Vec level3 = conv1d_pool(gru_outputs, conv_params, cache ? &cache->conv : nullptr, &skips);
    if (stats) stats->conv_width_skips += skips;
    MultiLevelFeature f = assemble_levels(std::move(level1), gru_outputs, std::move(level3));
    if (cache) {
        cache->gru_outputs = std::move(gru_outputs);
        cache->sequence_length = sequence.size();
    }
    return f;
}

void check_frames(const std::vector<Vec>& frames, const EncoderConfig& config) {
    if (frames.empty()) throw ValueError("encode_visual: video has no frames");
    for (std::size_t t = 0; t < frames.size(); ++t) {
        if (static_cast<int>(frames[t].size()) != config.frame_feature_dim) {
            std::ostringstream msg;
            msg << "encode_visual: frame " << t << " has dim " << frames[t].size()
                << ", config expects " << config.frame_feature_dim;
            throw ShapeError(msg.str());
        }
    }
}

MultiLevelFeature visual_levels(const std::vector<Vec>& frames, const ModelParameters& params,
                                const EncoderConfig& config, SequenceCache* cache,
                                EncodeStats* stats) {
    check_frames(frames, config);
    return run_tower(frames, mean_of(frames), params.visual_gru, params.visual_conv, cache,
                     stats);
}

MultiLevelFeature text_levels(std::span<const int> tokens, const ModelParameters& params,
                              const EncoderConfig& config, SequenceCache* cache,
                              std::vector<Vec>* embedded_out, EncodeStats* stats) {
    if (tokens.empty()) throw ValueError("encode_text: no in-vocabulary tokens (empty query)");
    Vec bow(static_cast<std::size_t>(config.vocab_size), 0.0);
    std::vector<Vec> embedded;
    embedded.reserve(tokens.size());
    for (int token : tokens) {
        if (token < 0 || token >= config.vocab_size) {
            std::ostringstream msg;
            msg << "encode_text: token index " << token << " outside vocabulary of size "
                << config.vocab_size;
            throw ShapeError(msg.str());
        }
        bow[static_cast<std::size_t>(token)] += 1.0;
        const auto row = params.word_embedding.row(token);
        embedded.emplace_back(row.begin(), row.end());
    }
    for (double& b : bow) b /= static_cast<double>(tokens.size());
    MultiLevelFeature f =
        run_tower(embedded, std::move(bow), params.text_gru, params.text_conv, cache, stats);
    if (embedded_out) *embedded_out = std::move(embedded);
    return f;
}

Tensor2 project(const Tensor2& features, ProjectionParams& proj, BatchNormCache* bn_cache) {
    const Tensor2 pre = linear_forward(features, proj.linear);
    return batchnorm_forward(pre, proj.bn, bn_cache);
}

// Backward through one tower item: gradient of the concatenated feature row
// splits into the three levels; level 2 spreads uniformly over time, level 3
// routes through the conv bank, and both meet again in the biGRU backward.
void tower_item_backward(const SequenceCache& item, std::span<const double> d_feature,
                         std::size_t level1_dim, const BiGruParams& gru_params,
                         const ConvBankParams& conv_params, BiGruParams& gru_grads,
                         ConvBankParams& conv_grads, std::vector<Vec>* d_inputs_out) {
    const std::size_t gru_dim = item.gru_outputs.front().size();
    const std::size_t steps = item.gru_outputs.size();
    const double* d_level2 = d_feature.data() + level1_dim;
    const std::span<const double> d_level3{d_feature.data() + level1_dim + gru_dim,
                                           d_feature.size() - level1_dim - gru_dim};

    std::vector<Vec> d_gru = conv1d_pool_backward(item.conv, conv_params, d_level3, conv_grads);
    const double inv_steps = 1.0 / static_cast<double>(steps);
    for (std::size_t t = 0; t < steps; ++t)
        for (std::size_t j = 0; j < gru_dim; ++j) d_gru[t][j] += d_level2[j] * inv_steps;

    std::vector<Vec> d_inputs = bigru_backward(item.gru, gru_params, d_gru, gru_grads);
    if (d_inputs_out) *d_inputs_out = std::move(d_inputs);
}

}  // namespace

EncodeResult encode_visual(const std::vector<Vec>& frames, ModelParameters& params,
                           const EncoderConfig& config, EncodeStats* stats) {
    EncodeResult result;
    result.feature = visual_levels(frames, params, config, nullptr, stats);
    Tensor2 batch(1, static_cast<int>(result.feature.concatenated.size()));
    std::copy(result.feature.concatenated.begin(), result.feature.concatenated.end(),
              batch.data.begin());
    const Tensor2 phi = project(batch, params.visual_proj, nullptr);
    result.embedding.assign(phi.data.begin(), phi.data.end());
    return result;
}

EncodeResult encode_text(std::span<const int> tokens, ModelParameters& params,
                         const EncoderConfig& config, EncodeStats* stats) {
    EncodeResult result;
    result.feature = text_levels(tokens, params, config, nullptr, nullptr, stats);
    Tensor2 batch(1, static_cast<int>(result.feature.concatenated.size()));
    std::copy(result.feature.concatenated.begin(), result.feature.concatenated.end(),
              batch.data.begin());
    const Tensor2 tau = project(batch, params.text_proj, nullptr);
    result.embedding.assign(tau.data.begin(), tau.data.end());
    return result;
}

Tensor2 encode_visual_batch(std::span<const std::vector<Vec>* const> videos,
                            ModelParameters& params, const EncoderConfig& config,
                            VisualBatchCache* cache, EncodeStats* stats) {
    if (videos.empty()) throw ValueError("encode_visual_batch: empty batch");
    const int batch = static_cast<int>(videos.size());
    Tensor2 features(batch, config.visual_feature_dim());
    if (cache) cache->items.assign(static_cast<std::size_t>(batch), SequenceCache{});
    for (int i = 0; i < batch; ++i) {
        const MultiLevelFeature f =
            visual_levels(*videos[static_cast<std::size_t>(i)], params, config,
                          cache ? &cache->items[static_cast<std::size_t>(i)] : nullptr, stats);
        std::copy(f.concatenated.begin(), f.concatenated.end(),
                  features.data.begin() + static_cast<std::size_t>(i) * features.cols);
    }
    if (cache) {
        cache->features = features;
        return project(features, params.visual_proj, &cache->bn);
    }
    return project(features, params.visual_proj, nullptr);
}

Tensor2 encode_text_batch(std::span<const std::vector<int>> token_lists, ModelParameters& params,
                          const EncoderConfig& config, TextBatchCache* cache,
                          EncodeStats* stats) {
    if (token_lists.empty()) throw ValueError("encode_text_batch: empty batch");
    const int batch = static_cast<int>(token_lists.size());
    Tensor2 features(batch, config.text_feature_dim());
    if (cache) {
        cache->items.assign(static_cast<std::size_t>(batch), SequenceCache{});
        cache->embedded.assign(static_cast<std::size_t>(batch), {});
        cache->tokens.assign(token_lists.begin(), token_lists.end());
    }
    for (int i = 0; i < batch; ++i) {
        const std::size_t si = static_cast<std::size_t>(i);
        const MultiLevelFeature f =
            text_levels(token_lists[si], params, config, cache ? &cache->items[si] : nullptr,
                        cache ? &cache->embedded[si] : nullptr, stats);
        std::copy(f.concatenated.begin(), f.concatenated.end(),
                  features.data.begin() + si * static_cast<std::size_t>(features.cols));
    }
    if (cache) {
        cache->features = features;
        return project(features, params.text_proj, &cache->bn);
    }
    return project(features, params.text_proj, nullptr);
}

void encode_visual_batch_backward(const VisualBatchCache& cache, const ModelParameters& params,
                                  const EncoderConfig& config, const Tensor2& d_embedding,
                                  ModelParameters& grads) {
    Tensor2 d_pre = batchnorm_backward(cache.bn, params.visual_proj.bn, d_embedding,
                                       grads.visual_proj.bn.gamma, grads.visual_proj.bn.beta);
    Tensor2 d_features =
        linear_backward(cache.features, params.visual_proj.linear, d_pre, grads.visual_proj.linear);
    for (std::size_t i = 0; i < cache.items.size(); ++i) {
        // Level-1 gradient lands on raw frame features (data, not params).
        tower_item_backward(cache.items[i], d_features.row(static_cast<int>(i)),
                            static_cast<std::size_t>(config.frame_feature_dim), params.visual_gru,
                            params.visual_conv, grads.visual_gru, grads.visual_conv, nullptr);
    }
}

void encode_text_batch_backward(const TextBatchCache& cache, const ModelParameters& params,
                                const EncoderConfig& config, const Tensor2& d_embedding,
                                ModelParameters& grads) {
    Tensor2 d_pre = batchnorm_backward(cache.bn, params.text_proj.bn, d_embedding,
                                       grads.text_proj.bn.gamma, grads.text_proj.bn.beta);
    Tensor2 d_features =
        linear_backward(cache.features, params.text_proj.linear, d_pre, grads.text_proj.linear);
    for (std::size_t i = 0; i < cache.items.size(); ++i) {
        std::vector<Vec> d_inputs;
        tower_item_backward(cache.items[i], d_features.row(static_cast<int>(i)),
                            static_cast<std::size_t>(config.vocab_size), params.text_gru,
                            params.text_conv, grads.text_gru, grads.text_conv, &d_inputs);
        const std::vector<int>& tokens = cache.tokens[i];
        for (std::size_t t = 0; t < tokens.size(); ++t) {
            auto row = grads.word_embedding.row(tokens[t]);
            for (std::size_t j = 0; j < row.size(); ++j) row[j] += d_inputs[t][j];
        }
    }
}

Tensor2 decode_batch(const Tensor2& phi, ModelParameters& params, DecoderCache* cache) {
    if (cache) cache->input = phi;
    const Tensor2 pre = linear_forward(phi, params.decoder.linear);
    Tensor2 probs = batchnorm_forward(pre, params.decoder.bn, cache ? &cache->bn : nullptr);
    sigmoid_inplace(probs.data);
    if (cache) cache->probs = probs;
    return probs;
}

Tensor2 decode_batch_backward(const DecoderCache& cache, const ModelParameters& params,
                              const Tensor2& d_logits, ModelParameters& grads) {
    Tensor2 d_pre = batchnorm_backward(cache.bn, params.decoder.bn, d_logits,
                                       grads.decoder.bn.gamma, grads.decoder.bn.beta);
    return linear_backward(cache.input, params.decoder.linear, d_pre, grads.decoder.linear);
}

Vec decode_single(const Vec& phi, ModelParameters& params) {
    Tensor2 batch(1, static_cast<int>(phi.size()));
    std::copy(phi.begin(), phi.end(), batch.data.begin());
    const Tensor2 probs = decode_batch(batch, params, nullptr);
    return Vec(probs.data.begin(), probs.data.end());
}

}  // namespace dts
