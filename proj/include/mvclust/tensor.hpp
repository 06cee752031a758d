#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace mvclust {

// Dense row-major matrix of doubles. All features, parameters and gradients
// in the library are carried in this type.
class Tensor2D {
public:
    Tensor2D() = default;
    Tensor2D(std::size_t rows, std::size_t cols, double fill = 0.0);
    Tensor2D(std::size_t rows, std::size_t cols, std::vector<double> values);
    Tensor2D(std::initializer_list<std::initializer_list<double>> rows);

    static Tensor2D identity(std::size_t n);

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    std::size_t size() const noexcept { return values_.size(); }
    bool empty() const noexcept { return values_.empty(); }

    double& operator()(std::size_t r, std::size_t c) noexcept { return values_[r * cols_ + c]; }
    double operator()(std::size_t r, std::size_t c) const noexcept { return values_[r * cols_ + c]; }

    std::span<double> row(std::size_t r) noexcept { return {values_.data() + r * cols_, cols_}; }
    std::span<const double> row(std::size_t r) const noexcept {
        return {values_.data() + r * cols_, cols_};
    }

    std::span<double> values() noexcept { return values_; }
    std::span<const double> values() const noexcept { return values_; }
    double* data() noexcept { return values_.data(); }
    const double* data() const noexcept { return values_.data(); }

    void fill(double v);
    bool all_finite() const noexcept;
    std::string shape_string() const;

    friend bool operator==(const Tensor2D& a, const Tensor2D& b) = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> values_;
};

// Throws DimensionError naming both shapes unless a and b agree.
void require_same_shape(const Tensor2D& a, const Tensor2D& b, const char* what);

// Throws NumericalError naming `what` if t has a NaN or Inf entry.
void require_finite(const Tensor2D& t, const char* what);

Tensor2D matmul(const Tensor2D& a, const Tensor2D& b);
// a * b^T
Tensor2D matmul_nt(const Tensor2D& a, const Tensor2D& b);
// a^T * b
Tensor2D matmul_tn(const Tensor2D& a, const Tensor2D& b);
Tensor2D transpose(const Tensor2D& a);

// Gradient of a matmul C = A B given dC, written into the caller's buffers.
// Either output may be null when that operand needs no gradient.
void matmul_backward(const Tensor2D& a, const Tensor2D& b, const Tensor2D& grad_out,
                     Tensor2D* grad_a, Tensor2D* grad_b);

Tensor2D relu(const Tensor2D& x);
// dX = dY where x > 0, else 0 (subgradient 0 at the kink).
Tensor2D relu_backward(const Tensor2D& x, const Tensor2D& grad_out);

// Row-wise softmax with row-max subtraction.
Tensor2D softmax_rows(const Tensor2D& x);
// Backprop through softmax given its output y.
Tensor2D softmax_rows_backward(const Tensor2D& y, const Tensor2D& grad_out);

// Adds the 1 x cols bias row to every row of x.
void add_row_bias(Tensor2D& x, const Tensor2D& bias);
// Column sums as a 1 x cols tensor.
Tensor2D column_sums(const Tensor2D& x);

// Rows selected by index, in index order.
Tensor2D gather_rows(const Tensor2D& x, std::span<const std::size_t> index);

void axpy(double alpha, const Tensor2D& x, Tensor2D& y);

}  // namespace mvclust
