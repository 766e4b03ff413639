#pragma once

#include <cmath>
#include <span>

namespace dts {

// Numerically stable logistic sigmoid (never exponentiates a positive
// argument).
inline double sigmoid(double x) {
    if (x >= 0.0) {
        return 1.0 / (1.0 + std::exp(-x));
    }
    const double e = std::exp(x);
    return e / (1.0 + e);
}

// Derivative expressed through the already-computed output value.
inline double sigmoid_grad_from_output(double y) { return y * (1.0 - y); }

inline double tanh_grad_from_output(double y) { return 1.0 - y * y; }

inline double relu(double x) { return x > 0.0 ? x : 0.0; }
inline double relu_grad(double x) { return x > 0.0 ? 1.0 : 0.0; }

inline void sigmoid_inplace(std::span<double> xs) {
    for (double& x : xs) x = sigmoid(x);
}

}  // namespace dts
