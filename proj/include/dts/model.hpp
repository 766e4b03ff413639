#pragma once

#include <functional>
#include <span>
#include <string_view>
#include <vector>

#include "dts/batchnorm.hpp"
#include "dts/conv1d.hpp"
#include "dts/gru.hpp"
#include "dts/linear.hpp"
#include "dts/rng.hpp"
#include "dts/tensor.hpp"

namespace dts {

// Architecture hyperparameters. Desk-scale defaults; everything is
// overridable through the config surface.
struct EncoderConfig {
    int frame_feature_dim = 32;
    int word_embedding_dim = 16;
    int gru_hidden_dim = 16;  // per direction
    std::vector<int> conv_filter_widths = {2, 3, 4};
    int conv_filters_per_width = 8;
    int common_dim = 64;
    int vocab_size = 0;  // set from the built vocabulary

    int gru_output_dim() const { return 2 * gru_hidden_dim; }
    int conv_output_dim() const {
        return conv_filters_per_width * static_cast<int>(conv_filter_widths.size());
    }
    // Level 1 of the visual side is the mean-pooled frame feature; level 1
    // of the text side is the normalized bag-of-words over the vocabulary.
    int visual_feature_dim() const {
        return frame_feature_dim + gru_output_dim() + conv_output_dim();
    }
    int text_feature_dim() const { return vocab_size + gru_output_dim() + conv_output_dim(); }

    void validate() const;
};

// Affine projection into the common space followed by batch normalization.
struct ProjectionParams {
    LinearParams linear;
    BatchNormState bn;
};

// Every trainable block of the dual-task network plus the BN buffers.
struct ModelParameters {
    Tensor2 word_embedding;  // vocab_size x word_embedding_dim
    BiGruParams text_gru;
    BiGruParams visual_gru;
    ConvBankParams text_conv;
    ConvBankParams visual_conv;
    ProjectionParams visual_proj;  // visual feature -> common space
    ProjectionParams text_proj;    // text feature -> common space
    ProjectionParams decoder;      // common space -> vocabulary logits
};

// Seeded initialization: Xavier-uniform weight matrices, zero biases,
// uniform(-0.1, 0.1) word embeddings, identity-like BN. Draw order is the
// declared block order, so a given seed fully determines the model.
ModelParameters init_parameters(const EncoderConfig& config, Rng& rng);

// Same shapes, all trainable values and buffers zeroed. Used as the
// gradient accumulator (BN gamma/beta slots hold their gradients).
ModelParameters zero_parameters(const EncoderConfig& config);

using ParamVisitor = std::function<void(std::string_view name, std::span<double> values)>;
using ConstParamVisitor = std::function<void(std::string_view name, std::span<const double> values)>;

// Walks the trainable blocks in the declared order (the contract for Adam
// state layout and the checkpoint file). Stable across runs.
void visit_trainable(ModelParameters& params, const ParamVisitor& visit);
void visit_trainable(const ModelParameters& params, const ConstParamVisitor& visit);

// Walks the BN running-moment buffers (not trainable, but checkpointed).
void visit_buffers(ModelParameters& params, const ParamVisitor& visit);
void visit_buffers(const ModelParameters& params, const ConstParamVisitor& visit);

std::size_t trainable_count(const EncoderConfig& config);

// Sets the mode of all three BN stages at once.
void set_batchnorm_mode(ModelParameters& params, BatchNormMode mode);

}  // namespace dts
