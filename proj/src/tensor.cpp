#include "mvclust/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "mvclust/errors.hpp"
#include "mvclust/kernels.hpp"

namespace mvclust {

Tensor2D::Tensor2D(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), values_(rows * cols, fill) {}

Tensor2D::Tensor2D(std::size_t rows, std::size_t cols, std::vector<double> values)
    : rows_(rows), cols_(cols), values_(std::move(values)) {
    if (values_.size() != rows * cols)
        throw DimensionError("Tensor2D: " + std::to_string(values_.size()) +
                             " values cannot fill a " + std::to_string(rows) + "x" +
                             std::to_string(cols) + " matrix");
}

Tensor2D::Tensor2D(std::initializer_list<std::initializer_list<double>> rows) {
    rows_ = rows.size();
    cols_ = rows_ == 0 ? 0 : rows.begin()->size();
    values_.reserve(rows_ * cols_);
    for (const auto& r : rows) {
        if (r.size() != cols_) throw DimensionError("Tensor2D: ragged initializer");
        values_.insert(values_.end(), r.begin(), r.end());
    }
}

Tensor2D Tensor2D::identity(std::size_t n) {
    Tensor2D t(n, n);
    for (std::size_t i = 0; i < n; ++i) t(i, i) = 1.0;
    return t;
}

void Tensor2D::fill(double v) { std::fill(values_.begin(), values_.end(), v); }

bool Tensor2D::all_finite() const noexcept {
    return std::all_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v); });
}

std::string Tensor2D::shape_string() const {
    return std::to_string(rows_) + "x" + std::to_string(cols_);
}

void require_same_shape(const Tensor2D& a, const Tensor2D& b, const char* what) {
    if (a.rows() != b.rows() || a.cols() != b.cols())
        throw DimensionError(std::string(what) + ": shape " + a.shape_string() + " vs " +
                             b.shape_string());
}

void require_finite(const Tensor2D& t, const char* what) {
    if (!t.all_finite()) throw NumericalError(std::string(what) + ": non-finite value");
}

Tensor2D matmul(const Tensor2D& a, const Tensor2D& b) {
    if (a.cols() != b.rows())
        throw DimensionError("matmul: cannot multiply " + a.shape_string() + " by " +
                             b.shape_string());
    Tensor2D c(a.rows(), b.cols());
    if (!c.empty()) kernels::gemm_nn(a.data(), b.data(), c.data(), a.rows(), a.cols(), b.cols());
    return c;
}

Tensor2D transpose(const Tensor2D& a) {
    Tensor2D t(a.cols(), a.rows());
    if (!t.empty()) kernels::transpose(a.data(), t.data(), a.rows(), a.cols());
    return t;
}

Tensor2D matmul_nt(const Tensor2D& a, const Tensor2D& b) {
    if (a.cols() != b.cols())
        throw DimensionError("matmul_nt: cannot multiply " + a.shape_string() + " by transpose of " +
                             b.shape_string());
    return matmul(a, transpose(b));
}

Tensor2D matmul_tn(const Tensor2D& a, const Tensor2D& b) {
    if (a.rows() != b.rows())
        throw DimensionError("matmul_tn: cannot multiply transpose of " + a.shape_string() +
                             " by " + b.shape_string());
    return matmul(transpose(a), b);
}

void matmul_backward(const Tensor2D& a, const Tensor2D& b, const Tensor2D& grad_out,
                     Tensor2D* grad_a, Tensor2D* grad_b) {
    if (grad_out.rows() != a.rows() || grad_out.cols() != b.cols())
        throw DimensionError("matmul_backward: upstream gradient " + grad_out.shape_string() +
                             " does not match product of " + a.shape_string() + " and " +
                             b.shape_string());
    if (grad_a) *grad_a = matmul_nt(grad_out, b);
    if (grad_b) *grad_b = matmul_tn(a, grad_out);
}

Tensor2D relu(const Tensor2D& x) {
    Tensor2D y = x;
    for (double& v : y.values()) v = v > 0.0 ? v : 0.0;
    return y;
}

Tensor2D relu_backward(const Tensor2D& x, const Tensor2D& grad_out) {
    require_same_shape(x, grad_out, "relu_backward");
    Tensor2D g(x.rows(), x.cols());
    auto xv = x.values();
    auto gv = grad_out.values();
    auto out = g.values();
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = xv[i] > 0.0 ? gv[i] : 0.0;
    return g;
}

Tensor2D softmax_rows(const Tensor2D& x) {
    Tensor2D y(x.rows(), x.cols());
    for (std::size_t r = 0; r < x.rows(); ++r) {
        auto in = x.row(r);
        auto out = y.row(r);
        if (in.empty()) continue;
        const double mx = *std::max_element(in.begin(), in.end());
        double total = 0.0;
        for (std::size_t c = 0; c < in.size(); ++c) {
            out[c] = std::exp(in[c] - mx);
            total += out[c];
        }
        for (double& v : out) v /= total;
    }
    return y;
}

Tensor2D softmax_rows_backward(const Tensor2D& y, const Tensor2D& grad_out) {
    require_same_shape(y, grad_out, "softmax_rows_backward");
    Tensor2D g(y.rows(), y.cols());
    for (std::size_t r = 0; r < y.rows(); ++r) {
        auto yr = y.row(r);
        auto gr = grad_out.row(r);
        double dot = 0.0;
        for (std::size_t c = 0; c < yr.size(); ++c) dot += yr[c] * gr[c];
        auto out = g.row(r);
        for (std::size_t c = 0; c < yr.size(); ++c) out[c] = yr[c] * (gr[c] - dot);
    }
    return g;
}

void add_row_bias(Tensor2D& x, const Tensor2D& bias) {
    if (bias.rows() != 1 || bias.cols() != x.cols())
        throw DimensionError("add_row_bias: bias " + bias.shape_string() + " for input " +
                             x.shape_string());
    for (std::size_t r = 0; r < x.rows(); ++r) {
        auto row = x.row(r);
        for (std::size_t c = 0; c < row.size(); ++c) row[c] += bias(0, c);
    }
}

Tensor2D column_sums(const Tensor2D& x) {
    Tensor2D s(1, x.cols());
    for (std::size_t r = 0; r < x.rows(); ++r) {
        auto row = x.row(r);
        for (std::size_t c = 0; c < row.size(); ++c) s(0, c) += row[c];
    }
    return s;
}

Tensor2D gather_rows(const Tensor2D& x, std::span<const std::size_t> index) {
    Tensor2D out(index.size(), x.cols());
    for (std::size_t i = 0; i < index.size(); ++i) {
        if (index[i] >= x.rows())
            throw DimensionError("gather_rows: row " + std::to_string(index[i]) +
                                 " out of range for " + x.shape_string());
        auto src = x.row(index[i]);
        std::copy(src.begin(), src.end(), out.row(i).begin());
    }
    return out;
}

void axpy(double alpha, const Tensor2D& x, Tensor2D& y) {
    require_same_shape(x, y, "axpy");
    auto xv = x.values();
    auto yv = y.values();
    for (std::size_t i = 0; i < yv.size(); ++i) yv[i] += alpha * xv[i];
}

}  // namespace mvclust
