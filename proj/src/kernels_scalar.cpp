#include "kernels_impl.hpp"

// Reference kernels. These definitions are the contract: SIMD backends must
// reproduce them bit for bit. Accumulations run left to right; this file is
// built with -ffp-contract=off so no mul+add pair fuses into an FMA.

namespace ada::kernels::detail {
namespace {

void matmul_accum_scalar(double* c, const double* a, const double* b,
                         std::size_t m, std::size_t k, std::size_t n) {
    for (std::size_t i = 0; i < m; ++i) {
        double* ci = c + i * n;
        const double* ai = a + i * k;
        for (std::size_t p = 0; p < k; ++p) {
            const double av = ai[p];
            const double* bp = b + p * n;
            for (std::size_t j = 0; j < n; ++j) {
                ci[j] += av * bp[j];
            }
        }
    }
}

void relu_scalar(double* dst, const double* x, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) {
        dst[i] = x[i] > 0.0 ? x[i] : 0.0;
    }
}

void relu_grad_scalar(double* dst, const double* x, const double* g,
                      std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) {
        dst[i] = x[i] > 0.0 ? g[i] : 0.0;
    }
}

void hadamard_scalar(double* dst, const double* a, const double* b,
                     std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) {
        dst[i] = a[i] * b[i];
    }
}

void axpy_scalar(double* dst, double alpha, const double* x, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) {
        dst[i] += alpha * x[i];
    }
}

void scale_scalar(double* dst, double alpha, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) {
        dst[i] *= alpha;
    }
}

void sgd_momentum_scalar(double* param, double* velocity, const double* grad,
                         double mu, double lr, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) {
        velocity[i] = mu * velocity[i] + grad[i];
        param[i] -= lr * velocity[i];
    }
}

const Table kScalarTable = {
    matmul_accum_scalar, relu_scalar,  relu_grad_scalar,    hadamard_scalar,
    axpy_scalar,         scale_scalar, sgd_momentum_scalar,
};

}  // namespace

const Table* scalar_table() { return &kScalarTable; }

}  // namespace ada::kernels::detail
