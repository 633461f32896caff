#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace rerank {

using Shape = std::vector<std::size_t>;

std::string shape_string(const Shape& dims);
std::size_t shape_product(const Shape& dims);

/// Dense row-major array of doubles. Immutable once constructed; kernels build
/// a fresh buffer and hand it over.
class Tensor {
public:
    Tensor(Shape dims, std::vector<double> data);

    static Tensor zeros(Shape dims);
    static Tensor matrix(std::size_t rows, std::size_t cols, std::vector<double> data);

    const Shape& dims() const noexcept { return dims_; }
    std::size_t rank() const noexcept { return dims_.size(); }
    std::size_t size() const noexcept { return data_.size(); }
    std::span<const double> data() const noexcept { return data_; }

    // Matrix views; requires rank 2 (a rank-1 tensor is treated as a column).
    std::size_t rows() const;
    std::size_t cols() const;
    double at(std::size_t row, std::size_t col) const { return data_[row * cols() + col]; }
    double operator[](std::size_t i) const { return data_[i]; }

    bool operator==(const Tensor&) const = default;

private:
    Shape dims_;
    std::vector<double> data_;
};

/// C = A * B for A m x k and B k x n.
Tensor gemm(const Tensor& a, const Tensor& b);

/// Unrolls the zero-padded windows of X (d x L) into a (d*w) x (L+w-1) matrix.
/// Rows o*d .. o*d+d-1 of column j hold padded column j-(w-1)+o.
Tensor im2col_wide(const Tensor& x, std::size_t width);

/// Wide (full) convolution of X (d x L) with filters (k x d x w) plus a
/// per-filter bias, computed as one GEMM over the im2col expansion.
/// Result is k x (L+w-1).
Tensor conv_wide(const Tensor& x, const Tensor& filters, const Tensor& bias);

Tensor relu(const Tensor& t);

/// Row-wise max over the columns of a k x L matrix.
Tensor maxpool_cols(const Tensor& m);

}  // namespace rerank
