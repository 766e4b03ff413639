#pragma once

#include <span>
#include <vector>

#include "dts/tensor.hpp"

namespace dts {

// Bank of 1-d convolutions over a sequence of channel vectors, one group of
// filters per window width, each group ReLU-activated and max-pooled over
// time. Output layout: widths in declared order, filters_per_width values
// each. A sequence shorter than a width contributes zeros for that width
// (padding-free skip); callers may count skips via the out-parameter.
struct ConvBankParams {
    int channels = 0;
    int filters_per_width = 0;
    std::vector<int> widths;
    std::vector<Tensor2> kernels;  // per width: filters x (width * channels)
    std::vector<Vec> biases;       // per width: filters

    int output_dim() const { return filters_per_width * static_cast<int>(widths.size()); }
};

ConvBankParams make_conv_bank(int channels, std::span<const int> widths, int filters_per_width);

struct ConvPoolCache {
    std::vector<Vec> inputs;
    // Per width and filter: the argmax time position (first maximum), or -1
    // when the width was skipped or every activation was zero.
    std::vector<std::vector<int>> argmax;
};

Vec conv1d_pool(std::span<const Vec> sequence, const ConvBankParams& params,
                ConvPoolCache* cache = nullptr, std::size_t* skipped_widths = nullptr);

// Routes pooled gradients back through the max positions. Accumulates into
// `grads` and returns dL/d sequence.
std::vector<Vec> conv1d_pool_backward(const ConvPoolCache& cache, const ConvBankParams& params,
                                      std::span<const double> d_output, ConvBankParams& grads);

}  // namespace dts
