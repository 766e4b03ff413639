#pragma once

#include "dts/tensor.hpp"

namespace dts {

enum class BatchNormMode { train, infer };

// Per-feature batch normalization state. gamma/beta are trainable; the
// running moments are buffers updated only by train-mode forward passes.
struct BatchNormState {
    Vec gamma;
    Vec beta;
    Vec running_mean;
    Vec running_var;
    double momentum = 0.1;
    double epsilon = 1e-5;
    BatchNormMode mode = BatchNormMode::train;

    explicit BatchNormState(int dim = 0)
        : gamma(static_cast<std::size_t>(dim), 1.0),
          beta(static_cast<std::size_t>(dim), 0.0),
          running_mean(static_cast<std::size_t>(dim), 0.0),
          running_var(static_cast<std::size_t>(dim), 1.0) {}

    int dim() const { return static_cast<int>(gamma.size()); }
};

// Saved forward intermediates needed by the train-mode backward pass.
struct BatchNormCache {
    Tensor2 normalized;  // x_hat
    Vec inv_std;         // 1 / sqrt(var + eps), per feature
    int batch = 0;
};

// Normalizes each column of `inputs` (rows are batch items). Train mode
// uses batch statistics (biased variance) and updates the running moments
// with momentum; a train-mode batch of size 1 is degenerate and raises
// ValueError. Infer mode uses the running moments and touches nothing.
Tensor2 batchnorm_forward(const Tensor2& inputs, BatchNormState& state,
                          BatchNormCache* cache = nullptr);

// Train-mode backward. Accumulates dL/dgamma and dL/dbeta and returns
// dL/d inputs.
Tensor2 batchnorm_backward(const BatchNormCache& cache, const BatchNormState& state,
                           const Tensor2& d_output, Vec& d_gamma, Vec& d_beta);

// Infer-mode backward: the running moments are constants, so the pass is a
// per-feature affine map.
Tensor2 batchnorm_infer_backward(const BatchNormState& state, const Tensor2& inputs,
                                 const Tensor2& d_output, Vec& d_gamma, Vec& d_beta);

}  // namespace dts
