#include "rerank/tensor.hpp"

#include <algorithm>
#include <numeric>

#include "rerank/error.hpp"

namespace rerank {

std::string shape_string(const Shape& dims) {
    std::string out = "[";
    for (std::size_t i = 0; i < dims.size(); ++i) {
        if (i) out += ",";
        out += std::to_string(dims[i]);
    }
    return out + "]";
}

std::size_t shape_product(const Shape& dims) {
    return std::accumulate(dims.begin(), dims.end(), std::size_t{1},
                           [](std::size_t a, std::size_t b) { return a * b; });
}

Tensor::Tensor(Shape dims, std::vector<double> data)
    : dims_(std::move(dims)), data_(std::move(data)) {
    if (dims_.empty()) fail(ErrorCode::kShape, "tensor dims must be non-empty");
    for (auto d : dims_) {
        if (d == 0) fail(ErrorCode::kShape, "tensor dims must be positive, got " + shape_string(dims_));
    }
    if (shape_product(dims_) != data_.size()) {
        fail(ErrorCode::kShape, "tensor dims " + shape_string(dims_) + " need " +
                                    std::to_string(shape_product(dims_)) + " elements, got " +
                                    std::to_string(data_.size()));
    }
}

Tensor Tensor::zeros(Shape dims) {
    std::vector<double> data(shape_product(dims), 0.0);
    return Tensor(std::move(dims), std::move(data));
}

Tensor Tensor::matrix(std::size_t rows, std::size_t cols, std::vector<double> data) {
    return Tensor({rows, cols}, std::move(data));
}

std::size_t Tensor::rows() const {
    if (dims_.size() > 2) fail(ErrorCode::kShape, "expected a matrix, got " + shape_string(dims_));
    return dims_[0];
}

std::size_t Tensor::cols() const {
    if (dims_.size() > 2) fail(ErrorCode::kShape, "expected a matrix, got " + shape_string(dims_));
    return dims_.size() == 2 ? dims_[1] : 1;
}

Tensor gemm(const Tensor& a, const Tensor& b) {
    const std::size_t m = a.rows(), k = a.cols(), n = b.cols();
    if (b.rows() != k) {
        fail(ErrorCode::kShape, "gemm inner dimensions disagree: " + shape_string(a.dims()) +
                                    " x " + shape_string(b.dims()));
    }
    std::vector<double> c(m * n, 0.0);
    const auto ad = a.data();
    const auto bd = b.data();
    // i-p-j order keeps the inner loop contiguous in both B and C.
    for (std::size_t i = 0; i < m; ++i) {
        double* crow = c.data() + i * n;
        for (std::size_t p = 0; p < k; ++p) {
            const double aip = ad[i * k + p];
            const double* brow = bd.data() + p * n;
            for (std::size_t j = 0; j < n; ++j) crow[j] += aip * brow[j];
        }
    }
    return Tensor::matrix(m, n, std::move(c));
}

Tensor im2col_wide(const Tensor& x, std::size_t width) {
    if (width < 1) fail(ErrorCode::kArgument, "im2col window width must be >= 1");
    if (x.size() == 0) fail(ErrorCode::kArgument, "im2col input is empty");
    const std::size_t d = x.rows(), len = x.cols();
    const std::size_t out_cols = len + width - 1;
    std::vector<double> out(d * width * out_cols, 0.0);
    const auto xd = x.data();
    for (std::size_t o = 0; o < width; ++o) {
        for (std::size_t r = 0; r < d; ++r) {
            double* orow = out.data() + (o * d + r) * out_cols;
            // padded column j-(w-1)+o maps to source column j+o-(w-1)
            for (std::size_t j = 0; j < out_cols; ++j) {
                const std::size_t shifted = j + o;
                if (shifted < width - 1) continue;
                const std::size_t src = shifted - (width - 1);
                if (src >= len) continue;
                orow[j] = xd[r * len + src];
            }
        }
    }
    return Tensor::matrix(d * width, out_cols, std::move(out));
}

Tensor conv_wide(const Tensor& x, const Tensor& filters, const Tensor& bias) {
    if (filters.rank() != 3) {
        fail(ErrorCode::kShape, "conv filters must be k x d x w, got " + shape_string(filters.dims()));
    }
    const std::size_t k = filters.dims()[0], depth = filters.dims()[1], w = filters.dims()[2];
    const std::size_t d = x.rows();
    if (depth != d) {
        fail(ErrorCode::kShape, "conv filter depth mismatch: filters " + shape_string(filters.dims()) +
                                    " vs input " + shape_string(x.dims()));
    }
    if (bias.size() != k) {
        fail(ErrorCode::kShape, "conv bias " + shape_string(bias.dims()) + " does not match filters " +
                                    shape_string(filters.dims()));
    }
    // Reorder each d x w filter into im2col's (offset, row) stacking.
    std::vector<double> flat(k * d * w);
    const auto fd = filters.data();
    for (std::size_t f = 0; f < k; ++f)
        for (std::size_t r = 0; r < d; ++r)
            for (std::size_t o = 0; o < w; ++o)
                flat[f * d * w + o * d + r] = fd[(f * d + r) * w + o];

    Tensor product = gemm(Tensor::matrix(k, d * w, std::move(flat)), im2col_wide(x, w));
    const std::size_t n = product.cols();
    std::vector<double> out(product.data().begin(), product.data().end());
    for (std::size_t f = 0; f < k; ++f)
        for (std::size_t j = 0; j < n; ++j) out[f * n + j] += bias[f];
    return Tensor::matrix(k, n, std::move(out));
}

Tensor relu(const Tensor& t) {
    std::vector<double> out(t.data().begin(), t.data().end());
    for (auto& v : out) v = std::max(0.0, v);
    return Tensor(t.dims(), std::move(out));
}

Tensor maxpool_cols(const Tensor& m) {
    const std::size_t k = m.rows(), n = m.cols();
    if (n == 0) fail(ErrorCode::kArgument, "maxpool over zero columns");
    std::vector<double> out(k);
    const auto md = m.data();
    for (std::size_t f = 0; f < k; ++f) {
        out[f] = *std::max_element(md.begin() + f * n, md.begin() + (f + 1) * n);
    }
    return Tensor({k}, std::move(out));
}

}  // namespace rerank
