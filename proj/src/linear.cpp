#include "dts/linear.hpp"

#include <sstream>

#include "dts/error.hpp"

namespace dts {

namespace {
void check_vector_dim(const char* op, std::size_t got, int want) {
    if (got != static_cast<std::size_t>(want)) {
        std::ostringstream msg;
        msg << op << ": vector has dim " << got << ", layer expects " << want;
        throw ShapeError(msg.str());
    }
}
}  // namespace

Vec fc_forward(std::span<const double> x, const Tensor2& weight, std::span<const double> bias) {
    check_vector_dim("fc_forward", x.size(), weight.cols);
    check_vector_dim("fc_forward", bias.size(), weight.rows);
    Vec out = matvec(weight, x);
    for (int i = 0; i < weight.rows; ++i) out[static_cast<std::size_t>(i)] += bias[static_cast<std::size_t>(i)];
    return out;
}

FcBackwardResult fc_backward(std::span<const double> x, const Tensor2& weight,
                             std::span<const double> d_output) {
    check_vector_dim("fc_backward", x.size(), weight.cols);
    check_vector_dim("fc_backward", d_output.size(), weight.rows);
    FcBackwardResult result;
    result.d_input = matvec_t(weight, d_output);
    result.d_weight = Tensor2(weight.rows, weight.cols);
    for (int i = 0; i < weight.rows; ++i) {
        const double g = d_output[static_cast<std::size_t>(i)];
        double* wrow = result.d_weight.data.data() + static_cast<std::size_t>(i) * weight.cols;
        for (int j = 0; j < weight.cols; ++j) wrow[j] = g * x[static_cast<std::size_t>(j)];
    }
    result.d_bias.assign(d_output.begin(), d_output.end());
    return result;
}

Tensor2 linear_forward(const Tensor2& inputs, const LinearParams& params) {
    Tensor2 out = matmul_nt(inputs, params.weight);
    for (int i = 0; i < out.rows; ++i) {
        double* row = out.data.data() + static_cast<std::size_t>(i) * out.cols;
        for (int j = 0; j < out.cols; ++j) row[j] += params.bias[static_cast<std::size_t>(j)];
    }
    return out;
}

Tensor2 linear_backward(const Tensor2& inputs, const LinearParams& params,
                        const Tensor2& d_output, LinearParams& grads) {
    if (d_output.rows != inputs.rows || d_output.cols != params.out_dim()) {
        std::ostringstream msg;
        msg << "linear_backward: d_output is " << d_output.rows << "x" << d_output.cols
            << ", expected " << inputs.rows << "x" << params.out_dim();
        throw ShapeError(msg.str());
    }
    Tensor2 dw = matmul_tn(d_output, inputs);  // out_dim x in_dim
    add_inplace(grads.weight, dw);
    for (int i = 0; i < d_output.rows; ++i) {
        const double* row = d_output.data.data() + static_cast<std::size_t>(i) * d_output.cols;
        for (int j = 0; j < d_output.cols; ++j) grads.bias[static_cast<std::size_t>(j)] += row[j];
    }
    return matmul(d_output, params.weight);  // batch x in_dim
}

}  // namespace dts
