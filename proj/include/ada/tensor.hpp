#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "ada/errors.hpp"

namespace ada {

using Vec = std::vector<double>;

// Dense row-major matrix of doubles. All training math runs in 64-bit;
// 32-bit floats appear only at the feature-file boundary.
struct Tensor2 {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;  // rows * cols, row-major

    Tensor2() = default;
    Tensor2(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}
    Tensor2(std::size_t r, std::size_t c, std::vector<double> d);

    double& at(std::size_t r, std::size_t c) { return data[r * cols + c]; }
    double at(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
    double* row(std::size_t r) { return data.data() + r * cols; }
    const double* row(std::size_t r) const { return data.data() + r * cols; }
    std::size_t size() const { return data.size(); }

    bool operator==(const Tensor2&) const = default;
};

// "3x4" -- used in dimension-error messages.
std::string shape_str(const Tensor2& t);
std::string shape_str(std::size_t rows, std::size_t cols);

bool all_finite(const Tensor2& t);
bool all_finite(const Vec& v);

Tensor2 transposed(const Tensor2& t);

// Column sums / means, accumulated row by row in ascending row order.
Vec col_sums(const Tensor2& t);
Vec col_means(const Tensor2& t);

}  // namespace ada
