#pragma once

#include <span>
#include <vector>

#include "dts/tensor.hpp"

namespace dts::reference {

// Serial reference kernels. Deliberately naive (textbook triple loop, no
// OpenMP, no blocking) and kept as an independent code path: tests compare
// the parallel kernels against these bit-for-bit, and the benchmark tool
// measures the gap.
Tensor2 matmul(const Tensor2& a, const Tensor2& b);
Tensor2 matmul_nt(const Tensor2& a, const Tensor2& b);
Tensor2 matmul_tn(const Tensor2& a, const Tensor2& b);

// Cosine of `query` against every row of `items`, serial.
std::vector<double> cosine_scores(const Tensor2& items, std::span<const double> query);

}  // namespace dts::reference
