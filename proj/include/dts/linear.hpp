#pragma once

#include <span>

#include "dts/tensor.hpp"

namespace dts {

// Affine layer parameters, weight laid out as out_dim x in_dim.
struct LinearParams {
    Tensor2 weight;
    Vec bias;

    int in_dim() const { return weight.cols; }
    int out_dim() const { return weight.rows; }
};

// y = W x + b for a single vector.
Vec fc_forward(std::span<const double> x, const Tensor2& weight, std::span<const double> bias);

struct FcBackwardResult {
    Vec d_input;
    Tensor2 d_weight;
    Vec d_bias;
};

// Gradients of a scalar loss through y = W x + b given dL/dy.
FcBackwardResult fc_backward(std::span<const double> x, const Tensor2& weight,
                             std::span<const double> d_output);

// Batched forward: rows of `inputs` are independent items; returns
// inputs * W^T + bias broadcast over rows.
Tensor2 linear_forward(const Tensor2& inputs, const LinearParams& params);

// Batched backward. Accumulates parameter gradients into `grads`
// (must already have the layer's shapes) and returns dL/d inputs.
Tensor2 linear_backward(const Tensor2& inputs, const LinearParams& params,
                        const Tensor2& d_output, LinearParams& grads);

}  // namespace dts
