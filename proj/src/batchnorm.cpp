#include "dts/batchnorm.hpp"

#include <cmath>
#include <sstream>

#include "dts/error.hpp"

namespace dts {

namespace {
void check_dims(const char* op, const Tensor2& inputs, const BatchNormState& state) {
    if (inputs.cols != state.dim()) {
        std::ostringstream msg;
        msg << op << ": input has " << inputs.cols << " features, state has " << state.dim();
        throw ShapeError(msg.str());
    }
    if (inputs.rows < 1) throw ValueError(std::string(op) + ": empty batch");
}
}  // namespace

Tensor2 batchnorm_forward(const Tensor2& inputs, BatchNormState& state, BatchNormCache* cache) {
    check_dims("batchnorm_forward", inputs, state);
    const int batch = inputs.rows;
    const int dim = inputs.cols;
    Tensor2 out(batch, dim);

    if (state.mode == BatchNormMode::infer) {
        for (int j = 0; j < dim; ++j) {
            const std::size_t sj = static_cast<std::size_t>(j);
            const double inv = 1.0 / std::sqrt(state.running_var[sj] + state.epsilon);
            for (int i = 0; i < batch; ++i)
                out.at(i, j) = state.gamma[sj] * (inputs.at(i, j) - state.running_mean[sj]) * inv +
                               state.beta[sj];
        }
        return out;
    }

    if (batch < 2)
        throw ValueError("batchnorm_forward: train mode needs batch size >= 2, got 1");

    if (cache) {
        cache->normalized = Tensor2(batch, dim);
        cache->inv_std.assign(static_cast<std::size_t>(dim), 0.0);
        cache->batch = batch;
    }

    for (int j = 0; j < dim; ++j) {
        const std::size_t sj = static_cast<std::size_t>(j);
        double mean = 0.0;
        for (int i = 0; i < batch; ++i) mean += inputs.at(i, j);
        mean /= batch;
        double var = 0.0;
        for (int i = 0; i < batch; ++i) {
            const double d = inputs.at(i, j) - mean;
            var += d * d;
        }
        var /= batch;  // biased variance normalizes the batch
        const double inv = 1.0 / std::sqrt(var + state.epsilon);
        for (int i = 0; i < batch; ++i) {
            const double normalized = (inputs.at(i, j) - mean) * inv;
            out.at(i, j) = state.gamma[sj] * normalized + state.beta[sj];
            if (cache) cache->normalized.at(i, j) = normalized;
        }
        if (cache) cache->inv_std[sj] = inv;

        // Running moments track the batch statistics by EMA; the variance
        // estimate stored for inference is the unbiased one.
        const double unbiased = var * batch / (batch - 1);
        state.running_mean[sj] = (1.0 - state.momentum) * state.running_mean[sj] + state.momentum * mean;
        state.running_var[sj] = (1.0 - state.momentum) * state.running_var[sj] + state.momentum * unbiased;
    }
    return out;
}

Tensor2 batchnorm_backward(const BatchNormCache& cache, const BatchNormState& state,
                           const Tensor2& d_output, Vec& d_gamma, Vec& d_beta) {
    const int batch = cache.batch;
    const int dim = state.dim();
    if (d_output.rows != batch || d_output.cols != dim)
        throw ShapeError("batchnorm_backward: gradient shape does not match cached forward");

    Tensor2 d_input(batch, dim);
    for (int j = 0; j < dim; ++j) {
        const std::size_t sj = static_cast<std::size_t>(j);
        double sum_dy = 0.0;
        double sum_dy_xhat = 0.0;
        for (int i = 0; i < batch; ++i) {
            const double dy = d_output.at(i, j);
            sum_dy += dy;
            sum_dy_xhat += dy * cache.normalized.at(i, j);
        }
        d_beta[sj] += sum_dy;
        d_gamma[sj] += sum_dy_xhat;
        const double scale = state.gamma[sj] * cache.inv_std[sj] / batch;
        for (int i = 0; i < batch; ++i) {
            const double dy = d_output.at(i, j);
            d_input.at(i, j) =
                scale * (batch * dy - sum_dy - cache.normalized.at(i, j) * sum_dy_xhat);
        }
    }
    return d_input;
}

Tensor2 batchnorm_infer_backward(const BatchNormState& state, const Tensor2& inputs,
                                 const Tensor2& d_output, Vec& d_gamma, Vec& d_beta) {
    check_dims("batchnorm_infer_backward", inputs, state);
    Tensor2 d_input(inputs.rows, inputs.cols);
    for (int j = 0; j < inputs.cols; ++j) {
        const std::size_t sj = static_cast<std::size_t>(j);
        const double inv = 1.0 / std::sqrt(state.running_var[sj] + state.epsilon);
        for (int i = 0; i < inputs.rows; ++i) {
            const double dy = d_output.at(i, j);
            d_beta[sj] += dy;
            d_gamma[sj] += dy * (inputs.at(i, j) - state.running_mean[sj]) * inv;
            d_input.at(i, j) = dy * state.gamma[sj] * inv;
        }
    }
    return d_input;
}

}  // namespace dts
