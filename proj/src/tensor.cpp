#include "ada/tensor.hpp"

#include <cmath>
#include <utility>

#include "ada/kernels.hpp"

namespace ada {

Tensor2::Tensor2(std::size_t r, std::size_t c, std::vector<double> d)
    : rows(r), cols(c), data(std::move(d)) {
    if (data.size() != rows * cols) {
        throw DimensionError("Tensor2: data length " + std::to_string(data.size()) +
                             " does not match shape " + shape_str(rows, cols));
    }
}

std::string shape_str(std::size_t rows, std::size_t cols) {
    return std::to_string(rows) + "x" + std::to_string(cols);
}

std::string shape_str(const Tensor2& t) { return shape_str(t.rows, t.cols); }

bool all_finite(const Tensor2& t) { return all_finite(t.data); }

bool all_finite(const Vec& v) {
    for (double x : v) {
        if (!std::isfinite(x)) return false;
    }
    return true;
}

Tensor2 transposed(const Tensor2& t) {
    Tensor2 out(t.cols, t.rows);
    for (std::size_t r = 0; r < t.rows; ++r) {
        for (std::size_t c = 0; c < t.cols; ++c) {
            out.at(c, r) = t.at(r, c);
        }
    }
    return out;
}

Vec col_sums(const Tensor2& t) {
    Vec out(t.cols, 0.0);
    for (std::size_t r = 0; r < t.rows; ++r) {
        kernels::axpy(out.data(), 1.0, t.row(r), t.cols);
    }
    return out;
}

Vec col_means(const Tensor2& t) {
    Vec out = col_sums(t);
    const double tcount = static_cast<double>(t.rows);
    for (double& x : out) x /= tcount;
    return out;
}

}  // namespace ada
