#pragma once

#include <span>
#include <vector>

#include "dts/model.hpp"
#include "dts/tensor.hpp"

namespace dts {

// The three encoding levels of one modality plus their concatenation:
// level1 = global mean pool (frame features / bag-of-words), level2 =
// mean-pooled biGRU states, level3 = convolution bank over the biGRU states.
struct MultiLevelFeature {
    Vec level1;
    Vec level2;
    Vec level3;
    Vec concatenated;
};

struct EncodeStats {
    std::size_t conv_width_skips = 0;
};

struct EncodeResult {
    MultiLevelFeature feature;
    Vec embedding;  // projected + batch-normalized, length common_dim
};

// Single-item encoders. They run under the model's current BN mode; train
// mode rejects the implied batch of one, so callers use infer mode here.
EncodeResult encode_visual(const std::vector<Vec>& frames, ModelParameters& params,
                           const EncoderConfig& config, EncodeStats* stats = nullptr);
EncodeResult encode_text(std::span<const int> tokens, ModelParameters& params,
                         const EncoderConfig& config, EncodeStats* stats = nullptr);

// Forward intermediates of one sequence tower (shared by both modalities).
struct SequenceCache {
    BiGruCache gru;
    std::vector<Vec> gru_outputs;
    ConvPoolCache conv;
    std::size_t sequence_length = 0;
};

struct VisualBatchCache {
    std::vector<SequenceCache> items;
    Tensor2 features;  // batch x visual_feature_dim
    BatchNormCache bn;
};

struct TextBatchCache {
    std::vector<std::vector<int>> tokens;
    std::vector<SequenceCache> items;
    std::vector<std::vector<Vec>> embedded;  // per item, gru inputs
    Tensor2 features;                        // batch x text_feature_dim
    BatchNormCache bn;
};

// Batched encoders used by the training loop. Each row of the result is one
// item's embedding. BN behaves per the model's mode.
Tensor2 encode_visual_batch(std::span<const std::vector<Vec>* const> videos,
                            ModelParameters& params, const EncoderConfig& config,
                            VisualBatchCache* cache = nullptr, EncodeStats* stats = nullptr);
Tensor2 encode_text_batch(std::span<const std::vector<int>> token_lists, ModelParameters& params,
                          const EncoderConfig& config, TextBatchCache* cache = nullptr,
                          EncodeStats* stats = nullptr);

// Train-mode backward passes; accumulate into `grads`.
void encode_visual_batch_backward(const VisualBatchCache& cache, const ModelParameters& params,
                                  const EncoderConfig& config, const Tensor2& d_embedding,
                                  ModelParameters& grads);
void encode_text_batch_backward(const TextBatchCache& cache, const ModelParameters& params,
                                const EncoderConfig& config, const Tensor2& d_embedding,
                                ModelParameters& grads);

struct DecoderCache {
    Tensor2 input;  // phi batch
    BatchNormCache bn;
    Tensor2 probs;
};

// Concept decoder: sigmoid(BN(W phi + b)) per row.
Tensor2 decode_batch(const Tensor2& phi, ModelParameters& params, DecoderCache* cache = nullptr);

// Backward from dL/d logits; returns dL/d phi.
Tensor2 decode_batch_backward(const DecoderCache& cache, const ModelParameters& params,
                              const Tensor2& d_logits, ModelParameters& grads);

// Single-item decoder under the current BN mode (infer mode for indexing).
Vec decode_single(const Vec& phi, ModelParameters& params);

}  // namespace dts
