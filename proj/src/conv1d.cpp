#include "dts/conv1d.hpp"

#include <sstream>

#include "dts/error.hpp"

namespace dts {

ConvBankParams make_conv_bank(int channels, std::span<const int> widths, int filters_per_width) {
    if (channels < 1 || filters_per_width < 1 || widths.empty())
        throw ValueError("make_conv_bank: need positive channels, filters and at least one width");
    ConvBankParams p;
    p.channels = channels;
    p.filters_per_width = filters_per_width;
    p.widths.assign(widths.begin(), widths.end());
    for (int w : p.widths) {
        if (w < 1) throw ValueError("make_conv_bank: widths must be positive");
        p.kernels.emplace_back(filters_per_width, w * channels);
        p.biases.emplace_back(static_cast<std::size_t>(filters_per_width), 0.0);
    }
    return p;
}

Vec conv1d_pool(std::span<const Vec> sequence, const ConvBankParams& params, ConvPoolCache* cache,
                std::size_t* skipped_widths) {
    if (sequence.empty()) throw ValueError("conv1d_pool: empty sequence");
    for (std::size_t t = 0; t < sequence.size(); ++t) {
        if (static_cast<int>(sequence[t].size()) != params.channels) {
            std::ostringstream msg;
            msg << "conv1d_pool: step " << t << " has " << sequence[t].size()
                << " channels, bank expects " << params.channels;
            throw ShapeError(msg.str());
        }
    }

    const int steps = static_cast<int>(sequence.size());
    Vec out(static_cast<std::size_t>(params.output_dim()), 0.0);
    if (cache) {
        cache->inputs.assign(sequence.begin(), sequence.end());
        cache->argmax.assign(params.widths.size(),
                             std::vector<int>(static_cast<std::size_t>(params.filters_per_width), -1));
    }

    std::size_t out_offset = 0;
    for (std::size_t wi = 0; wi < params.widths.size(); ++wi) {
        const int width = params.widths[wi];
        if (steps < width) {
            if (skipped_widths) ++*skipped_widths;
            out_offset += static_cast<std::size_t>(params.filters_per_width);
            continue;
        }
        const Tensor2& kernel = params.kernels[wi];
        const Vec& bias = params.biases[wi];
        for (int f = 0; f < params.filters_per_width; ++f) {
            const double* krow = kernel.data.data() + static_cast<std::size_t>(f) * kernel.cols;
            double best = 0.0;  // ReLU floor: activations below zero never win
            int best_pos = -1;
            for (int t = 0; t + width <= steps; ++t) {
                double acc = bias[static_cast<std::size_t>(f)];
                for (int j = 0; j < width; ++j) {
                    const Vec& frame = sequence[static_cast<std::size_t>(t + j)];
                    const double* kpart = krow + static_cast<std::size_t>(j) * params.channels;
                    for (int c = 0; c < params.channels; ++c)
                        acc += kpart[c] * frame[static_cast<std::size_t>(c)];
                }
                if (acc > best) {
                    best = acc;
                    best_pos = t;
                }
            }
            out[out_offset + static_cast<std::size_t>(f)] = best;
            if (cache) cache->argmax[wi][static_cast<std::size_t>(f)] = best_pos;
        }
        out_offset += static_cast<std::size_t>(params.filters_per_width);
    }
    return out;
}

std::vector<Vec> conv1d_pool_backward(const ConvPoolCache& cache, const ConvBankParams& params,
                                      std::span<const double> d_output, ConvBankParams& grads) {
    if (d_output.size() != static_cast<std::size_t>(params.output_dim()))
        throw ShapeError("conv1d_pool_backward: gradient size does not match bank output");
    std::vector<Vec> d_seq(cache.inputs.size(),
                           Vec(static_cast<std::size_t>(params.channels), 0.0));

    std::size_t out_offset = 0;
    for (std::size_t wi = 0; wi < params.widths.size(); ++wi) {
        const int width = params.widths[wi];
        for (int f = 0; f < params.filters_per_width; ++f) {
            const int pos = cache.argmax[wi][static_cast<std::size_t>(f)];
            if (pos < 0) continue;  // skipped width or fully inactive filter
            const double g = d_output[out_offset + static_cast<std::size_t>(f)];
            if (g == 0.0) continue;
            grads.biases[wi][static_cast<std::size_t>(f)] += g;
            double* dkrow =
                grads.kernels[wi].data.data() + static_cast<std::size_t>(f) * grads.kernels[wi].cols;
            const double* krow =
                params.kernels[wi].data.data() + static_cast<std::size_t>(f) * params.kernels[wi].cols;
            for (int j = 0; j < width; ++j) {
                const Vec& frame = cache.inputs[static_cast<std::size_t>(pos + j)];
                Vec& dframe = d_seq[static_cast<std::size_t>(pos + j)];
                double* dkpart = dkrow + static_cast<std::size_t>(j) * params.channels;
                const double* kpart = krow + static_cast<std::size_t>(j) * params.channels;
                for (int c = 0; c < params.channels; ++c) {
                    dkpart[c] += g * frame[static_cast<std::size_t>(c)];
                    dframe[static_cast<std::size_t>(c)] += g * kpart[c];
                }
            }
        }
        out_offset += static_cast<std::size_t>(params.filters_per_width);
    }
    return d_seq;
}

}  // namespace dts
