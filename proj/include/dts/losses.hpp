#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "dts/tensor.hpp"

namespace dts {

struct LossHyperParams {
    double margin = 0.2;
    double lambda = 0.2;
    double prediction_clip = 1e-7;

    void validate() const;
};

// Multi-label target over the vocabulary.
struct LabelVector {
    std::vector<std::uint8_t> bits;
    int positive_count = 0;

    int size() const { return static_cast<int>(bits.size()); }
    bool all_zero() const { return positive_count == 0; }
};

LabelVector make_label_vector(std::span<const std::uint8_t> bits);

struct RankingLossResult {
    double loss = 0.0;
    Tensor2 d_video;  // dL/d phi, batch x d
    Tensor2 d_text;   // dL/d tau, batch x d
};

// Improved marginal ranking loss with hardest in-batch negatives. Rows of
// video/text embeddings are aligned positive pairs. For each pair the
// hardest negative video and hardest negative text are the most similar
// items from a different group; per-pair loss is
//   max(0, margin + S(v-, q) - S(v, q)) + max(0, margin + S(v, q-) - S(v, q))
// and the result is the batch mean (sum when mean_reduction is false).
// group_ids defaults to row indices; rows sharing a group id are never each
// other's negatives (several captions of one video, for instance). A pair
// with no candidate negatives raises ValueError.
RankingLossResult ranking_loss(const Tensor2& video_emb, const Tensor2& text_emb, double margin,
                               std::span<const int> group_ids = {}, bool mean_reduction = true);

// Element-wise binary cross-entropy with probabilities clipped into
// [clip, 1 - clip] for log-safety.
Vec bce_per_class(std::span<const double> probs, const LabelVector& labels, double clip);

struct ClassSensitiveResult {
    double loss = 0.0;
    Vec d_logits;  // gradient wrt pre-sigmoid decoder outputs
};

// lambda * (mean BCE over positive classes) + (1 - lambda) * (mean BCE over
// negative classes), each mean normalized by its own class count. A side
// with zero classes contributes 0. Gradient is wrt the decoder logits; a
// clipped probability contributes zero gradient.
ClassSensitiveResult class_sensitive_loss(std::span<const double> probs, const LabelVector& labels,
                                          double lambda, double clip);

// Plain mean BCE over all classes, same gradient convention. Kept as the
// ablation baseline the class-sensitive loss is measured against.
ClassSensitiveResult plain_bce_loss(std::span<const double> probs, const LabelVector& labels,
                                    double clip);

// Unweighted sum of the two task losses for one batch.
double combined_loss(double matching, double classification);

}  // namespace dts
