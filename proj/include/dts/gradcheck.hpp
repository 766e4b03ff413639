#pragma once

#include <cstddef>
#include <functional>
#include <span>

#include "dts/tensor.hpp"

namespace dts {

struct GradCheckResult {
    double max_rel_error = 0.0;
    std::size_t worst_index = 0;
    double analytic_at_worst = 0.0;
    double numeric_at_worst = 0.0;
};

// Compares an analytic gradient against central finite differences of a
// scalar function, coordinate by coordinate. The relative error denominator
// is floored at 1e-6 so that near-zero gradients are judged on absolute
// error (the finite-difference noise floor sits around 1e-11 for eps=1e-5).
// eps must lie in [1e-7, 1e-3].
GradCheckResult grad_check(const std::function<double(std::span<const double>)>& f,
                           std::span<const double> point,
                           std::span<const double> analytic_grad, double eps);

}  // namespace dts
