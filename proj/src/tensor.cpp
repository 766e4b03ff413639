#include "dts/tensor.hpp"

#include <cmath>
#include <sstream>

#include "dts/error.hpp"

namespace dts {

namespace {

// Work threshold below which the OpenMP kernels stay serial; spawning a
// team for tiny products costs more than the product itself.
constexpr long kParallelFlopThreshold = 1 << 15;

[[noreturn]] void shape_fail(const char* op, int ar, int ac, int br, int bc) {
    std::ostringstream msg;
    msg << op << ": incompatible shapes " << ar << "x" << ac << " and " << br << "x" << bc;
    throw ShapeError(msg.str());
}

}  // namespace

Tensor2 matmul(const Tensor2& a, const Tensor2& b) {
    if (a.cols != b.rows) shape_fail("matmul", a.rows, a.cols, b.rows, b.cols);
    Tensor2 out(a.rows, b.cols);
    const long work = static_cast<long>(a.rows) * a.cols * b.cols;
#pragma omp parallel for schedule(static) if (work > kParallelFlopThreshold)
    for (int i = 0; i < a.rows; ++i) {
        const double* arow = a.data.data() + static_cast<std::size_t>(i) * a.cols;
        double* orow = out.data.data() + static_cast<std::size_t>(i) * out.cols;
        for (int k = 0; k < a.cols; ++k) {
            const double aik = arow[k];
            const double* brow = b.data.data() + static_cast<std::size_t>(k) * b.cols;
            for (int j = 0; j < b.cols; ++j) orow[j] += aik * brow[j];
        }
    }
    return out;
}

Tensor2 matmul_nt(const Tensor2& a, const Tensor2& b) {
    if (a.cols != b.cols) shape_fail("matmul_nt", a.rows, a.cols, b.rows, b.cols);
    Tensor2 out(a.rows, b.rows);
    const long work = static_cast<long>(a.rows) * a.cols * b.rows;
#pragma omp parallel for schedule(static) if (work > kParallelFlopThreshold)
    for (int i = 0; i < a.rows; ++i) {
        const double* arow = a.data.data() + static_cast<std::size_t>(i) * a.cols;
        double* orow = out.data.data() + static_cast<std::size_t>(i) * out.cols;
        for (int j = 0; j < b.rows; ++j) {
            const double* brow = b.data.data() + static_cast<std::size_t>(j) * b.cols;
            double acc = 0.0;
            for (int k = 0; k < a.cols; ++k) acc += arow[k] * brow[k];
            orow[j] = acc;
        }
    }
    return out;
}

Tensor2 matmul_tn(const Tensor2& a, const Tensor2& b) {
    if (a.rows != b.rows) shape_fail("matmul_tn", a.rows, a.cols, b.rows, b.cols);
    Tensor2 out(a.cols, b.cols);
    const long work = static_cast<long>(a.rows) * a.cols * b.cols;
#pragma omp parallel for schedule(static) if (work > kParallelFlopThreshold)
    for (int i = 0; i < a.cols; ++i) {
        double* orow = out.data.data() + static_cast<std::size_t>(i) * out.cols;
        for (int k = 0; k < a.rows; ++k) {
            const double aki = a.data[static_cast<std::size_t>(k) * a.cols + i];
            const double* brow = b.data.data() + static_cast<std::size_t>(k) * b.cols;
            for (int j = 0; j < b.cols; ++j) orow[j] += aki * brow[j];
        }
    }
    return out;
}

Vec matvec(const Tensor2& a, std::span<const double> x) {
    if (static_cast<std::size_t>(a.cols) != x.size())
        shape_fail("matvec", a.rows, a.cols, static_cast<int>(x.size()), 1);
    Vec out(static_cast<std::size_t>(a.rows), 0.0);
    for (int i = 0; i < a.rows; ++i) {
        const double* arow = a.data.data() + static_cast<std::size_t>(i) * a.cols;
        double acc = 0.0;
        for (int j = 0; j < a.cols; ++j) acc += arow[j] * x[j];
        out[static_cast<std::size_t>(i)] = acc;
    }
    return out;
}

Vec matvec_t(const Tensor2& a, std::span<const double> x) {
    if (static_cast<std::size_t>(a.rows) != x.size())
        shape_fail("matvec_t", a.rows, a.cols, static_cast<int>(x.size()), 1);
    Vec out(static_cast<std::size_t>(a.cols), 0.0);
    for (int i = 0; i < a.rows; ++i) {
        const double* arow = a.data.data() + static_cast<std::size_t>(i) * a.cols;
        const double xi = x[static_cast<std::size_t>(i)];
        for (int j = 0; j < a.cols; ++j) out[static_cast<std::size_t>(j)] += xi * arow[j];
    }
    return out;
}

double dot(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size())
        shape_fail("dot", static_cast<int>(a.size()), 1, static_cast<int>(b.size()), 1);
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
    return acc;
}

double l2_norm(std::span<const double> a) { return std::sqrt(dot(a, a)); }

double cosine_sim(std::span<const double> a, std::span<const double> b) {
    const double na = l2_norm(a);
    const double nb = l2_norm(b);
    if (na == 0.0 || nb == 0.0)
        throw ValueError("cosine_sim: zero-norm vector, similarity undefined");
    return dot(a, b) / (na * nb);
}

std::vector<double> cosine_scores(const Tensor2& items, std::span<const double> query) {
    if (items.cols != static_cast<int>(query.size()))
        shape_fail("cosine_scores", items.rows, items.cols, static_cast<int>(query.size()), 1);
    const double query_norm = l2_norm(query);
    if (query_norm == 0.0)
        throw ValueError("cosine_scores: zero-norm query, similarity undefined");
    std::vector<double> scores(static_cast<std::size_t>(items.rows));
    bool zero_row = false;
    const long work = static_cast<long>(items.rows) * items.cols;
    // Exceptions must not escape the parallel region, so a zero-norm row
    // only raises the flag; the throw happens after the join.
#pragma omp parallel for schedule(static) if (work > kParallelFlopThreshold)
    for (int i = 0; i < items.rows; ++i) {
        const auto row = items.row(i);
        const double row_norm = l2_norm(row);
        if (row_norm == 0.0) {
            zero_row = true;
            continue;
        }
        scores[static_cast<std::size_t>(i)] = dot(row, query) / (row_norm * query_norm);
    }
    if (zero_row) throw ValueError("cosine_scores: zero-norm item row, similarity undefined");
    return scores;
}

void axpy(double alpha, std::span<const double> x, std::span<double> y) {
    if (x.size() != y.size())
        shape_fail("axpy", static_cast<int>(x.size()), 1, static_cast<int>(y.size()), 1);
    for (std::size_t i = 0; i < x.size(); ++i) y[i] += alpha * x[i];
}

void add_inplace(Tensor2& a, const Tensor2& b) {
    if (!a.same_shape(b)) shape_fail("add_inplace", a.rows, a.cols, b.rows, b.cols);
    for (std::size_t i = 0; i < a.data.size(); ++i) a.data[i] += b.data[i];
}

void scale_inplace(Tensor2& a, double alpha) {
    for (double& v : a.data) v *= alpha;
}

}  // namespace dts
