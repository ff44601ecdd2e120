#pragma once

#include <cstddef>

// Internal: per-backend function tables. Each arch file fills one table;
// kernels.cpp owns selection.

namespace ada::kernels::detail {

struct Table {
    void (*matmul_accum)(double*, const double*, const double*,
                         std::size_t, std::size_t, std::size_t);
    void (*relu)(double*, const double*, std::size_t);
    void (*relu_grad)(double*, const double*, const double*, std::size_t);
    void (*hadamard)(double*, const double*, const double*, std::size_t);
    void (*axpy)(double*, double, const double*, std::size_t);
    void (*scale)(double*, double, std::size_t);
    void (*sgd_momentum)(double*, double*, const double*, double, double,
                         std::size_t);
};

const Table* scalar_table();
const Table* avx2_table();  // nullptr when not compiled in
const Table* neon_table();  // nullptr when not compiled in

bool cpu_supports_avx2();

}  // namespace ada::kernels::detail
