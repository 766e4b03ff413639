#include "dts/reference_kernels.hpp"

#include <sstream>

#include "dts/error.hpp"

namespace dts::reference {

namespace {
[[noreturn]] void shape_fail(const char* op, int ar, int ac, int br, int bc) {
    std::ostringstream msg;
    msg << op << ": incompatible shapes " << ar << "x" << ac << " and " << br << "x" << bc;
    throw ShapeError(msg.str());
}
}  // namespace

Tensor2 matmul(const Tensor2& a, const Tensor2& b) {
    if (a.cols != b.rows) shape_fail("reference::matmul", a.rows, a.cols, b.rows, b.cols);
    Tensor2 out(a.rows, b.cols);
    for (int i = 0; i < a.rows; ++i)
        for (int j = 0; j < b.cols; ++j) {
            double acc = 0.0;
            // Accumulation runs in ascending k, matching the parallel
            // kernel's per-element order so results agree bit-for-bit.
            for (int k = 0; k < a.cols; ++k) acc += a.at(i, k) * b.at(k, j);
            out.at(i, j) = acc;
        }
    return out;
}

Tensor2 matmul_nt(const Tensor2& a, const Tensor2& b) {
    if (a.cols != b.cols) shape_fail("reference::matmul_nt", a.rows, a.cols, b.rows, b.cols);
    Tensor2 out(a.rows, b.rows);
    for (int i = 0; i < a.rows; ++i)
        for (int j = 0; j < b.rows; ++j) {
            double acc = 0.0;
            for (int k = 0; k < a.cols; ++k) acc += a.at(i, k) * b.at(j, k);
            out.at(i, j) = acc;
        }
    return out;
}

Tensor2 matmul_tn(const Tensor2& a, const Tensor2& b) {
    if (a.rows != b.rows) shape_fail("reference::matmul_tn", a.rows, a.cols, b.rows, b.cols);
    Tensor2 out(a.cols, b.cols);
    for (int i = 0; i < a.cols; ++i)
        for (int j = 0; j < b.cols; ++j) {
            double acc = 0.0;
            for (int k = 0; k < a.rows; ++k) acc += a.at(k, i) * b.at(k, j);
            out.at(i, j) = acc;
        }
    return out;
}

std::vector<double> cosine_scores(const Tensor2& items, std::span<const double> query) {
    std::vector<double> scores(static_cast<std::size_t>(items.rows));
    for (int i = 0; i < items.rows; ++i) scores[static_cast<std::size_t>(i)] = cosine_sim(items.row(i), query);
    return scores;
}

}  // namespace dts::reference
