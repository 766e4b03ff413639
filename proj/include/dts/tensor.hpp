#pragma once

#include <span>
#include <vector>

namespace dts {

using Vec = std::vector<double>;

// Dense row-major float64 matrix. The whole pipeline runs in float64;
// shapes are validated at operation boundaries and violations raise
// ShapeError with both shapes in the message.
struct Tensor2 {
    int rows = 0;
    int cols = 0;
    std::vector<double> data;

    Tensor2() = default;
    Tensor2(int r, int c, double fill = 0.0)
        : rows(r), cols(c), data(static_cast<std::size_t>(r) * c, fill) {}

    double& at(int r, int c) { return data[static_cast<std::size_t>(r) * cols + c]; }
    double at(int r, int c) const { return data[static_cast<std::size_t>(r) * cols + c]; }

    std::span<double> row(int r) {
        return {data.data() + static_cast<std::size_t>(r) * cols, static_cast<std::size_t>(cols)};
    }
    std::span<const double> row(int r) const {
        return {data.data() + static_cast<std::size_t>(r) * cols, static_cast<std::size_t>(cols)};
    }

    bool same_shape(const Tensor2& other) const {
        return rows == other.rows && cols == other.cols;
    }

    void fill(double value) { data.assign(data.size(), value); }
};

// a * b for a: m x k, b: k x n.
Tensor2 matmul(const Tensor2& a, const Tensor2& b);

// a * b^T for a: m x k, b: n x k. This is the batched fully-connected
// forward layout (inputs x weights^T).
Tensor2 matmul_nt(const Tensor2& a, const Tensor2& b);

// a^T * b for a: k x m, b: k x n. Gradient-of-weights layout.
Tensor2 matmul_tn(const Tensor2& a, const Tensor2& b);

// a * x for a: m x n, x: n.
Vec matvec(const Tensor2& a, std::span<const double> x);

// a^T * x for a: m x n, x: m.
Vec matvec_t(const Tensor2& a, std::span<const double> x);

double dot(std::span<const double> a, std::span<const double> b);
double l2_norm(std::span<const double> a);

// Cosine similarity; raises ValueError if either vector has zero norm
// (undefined similarity).
double cosine_sim(std::span<const double> a, std::span<const double> b);

// Cosine of the query against every row of items. Rows are scored
// independently, so the parallel loop writes disjoint slots.
std::vector<double> cosine_scores(const Tensor2& items, std::span<const double> query);

// y += alpha * x
void axpy(double alpha, std::span<const double> x, std::span<double> y);

void add_inplace(Tensor2& a, const Tensor2& b);
void scale_inplace(Tensor2& a, double alpha);

}  // namespace dts
