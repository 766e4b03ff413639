#pragma once

#include <cstdint>
#include <span>

#include "dts/tensor.hpp"

namespace dts {

// Adam accumulator over one flat parameter vector. Moments are zero until
// the first step, so a step with all-zero gradients from a fresh state
// leaves the parameters untouched.
struct AdamState {
    Vec first_moment;
    Vec second_moment;
    std::int64_t step_count = 0;
    double learning_rate = 1e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;

    explicit AdamState(std::size_t n = 0, double lr = 1e-4)
        : first_moment(n, 0.0), second_moment(n, 0.0), learning_rate(lr) {}
};

// One bias-corrected Adam update, in place. Raises ValueError on non-finite
// gradients (training divergence) and ShapeError on size mismatch.
void adam_step(std::span<double> params, std::span<const double> grads, AdamState& state);

}  // namespace dts
