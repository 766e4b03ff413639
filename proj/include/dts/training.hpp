#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "dts/checkpoint.hpp"
#include "dts/dataset.hpp"
#include "dts/model.hpp"
#include "dts/vocab.hpp"

namespace dts {

struct TrainConfig {
    int epochs = 30;
    int batch_size = 32;
    double learning_rate = 1e-4;
    double margin = 0.2;
    double lambda = 0.2;
    double prediction_clip = 1e-7;
    // Task masks. Zeroing one switches off that task's forward and backward
    // passes entirely, which is what the ablation runs use.
    double matching_weight = 1.0;
    double classification_weight = 1.0;
    // Swaps the class-sensitive decoder loss for unweighted BCE (ablation).
    bool plain_bce = false;
    std::uint64_t seed = 1;
    // Fraction of pairs held out for model selection. Zero disables the
    // holdout; selection then falls back to lowest training loss.
    double validation_fraction = 0.1;
    int early_stop_patience = 5;
    std::string checkpoint_path;  // empty: result stays in memory

    void validate() const;
};

struct EpochStats {
    int epoch = 0;
    double matching_loss = 0.0;  // means over the batches actually stepped
    double classification_loss = 0.0;
    double combined_loss = 0.0;
    double validation_score = 0.0;
    std::size_t batches = 0;
    std::size_t batches_skipped = 0;  // size 1, or single group under matching
};

struct TrainResult {
    Checkpoint best;
    int best_epoch = -1;
    std::vector<EpochStats> epochs;
    // Pairs whose caption has no in-vocabulary tokens; excluded up front.
    std::size_t empty_token_pairs_dropped = 0;
    std::size_t train_pairs = 0;
    std::size_t validation_pairs = 0;
};

// Full dual-task loop: deterministic split, seeded init, per-epoch
// shuffled batches, one Adam step per batch over all parameters, per-epoch
// validation, best-score snapshot, early stop. encoder_config.vocab_size
// may be left 0; it is filled from the vocabulary. Non-finite batch losses
// abort with epoch, batch and per-task components in the message.
TrainResult train(const TrainConfig& config, EncoderConfig encoder_config, const Dataset& data,
                  const Vocabulary& vocab);

// Mean reciprocal rank of each query's positive item. Row i of
// item_embeddings belongs to item_ids[i]; query row j must find
// positive_ids[j] among them. Rank counts strictly better scores plus
// equal-scored items with smaller ids, so ties resolve the same way the
// search side orders results.
double mean_reciprocal_rank(const Tensor2& item_embeddings, std::span<const std::string> item_ids,
                            const Tensor2& query_embeddings,
                            std::span<const std::string> positive_ids);

// Embedding-space MRR of the given pairs against every video in the
// dataset, under the model's current BN stats (forced to infer mode).
// Pairs whose caption has no in-vocabulary tokens are skipped; if none
// survive the score is 0.
double validation_mrr(ModelParameters& params, const EncoderConfig& config, const Dataset& data,
                      const Vocabulary& vocab, std::span<const VideoTextPair> pairs);

}  // namespace dts
