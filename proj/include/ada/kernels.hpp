#pragma once

#include <cstddef>
#include <vector>

// Data-parallel inner loops behind the numerics layer. Every backend
// (scalar reference, AVX2, NEON) computes bit-identical results: SIMD
// variants vectorize across independent output elements, keep the per-element
// accumulation order of the scalar loops, and never use fused multiply-add.
// Equivalence is enforced by tests/test_kernels.cpp.
//
// The backend is picked once at startup (best supported one), can be forced
// with the ADA_KERNELS environment variable (scalar|avx2|neon), and can be
// switched programmatically. Selection is process-global; switch only from a
// single thread.

namespace ada::kernels {

enum class Backend { Scalar, Avx2, Neon };

Backend active();
const char* backend_name(Backend b);
std::vector<Backend> available();

// Returns false (and keeps the current backend) when b is not supported on
// this machine.
bool set_backend(Backend b);

// c (m x n) += a (m x k) . b (k x n). Row-major, no aliasing. Each output
// element accumulates in ascending-k order.
void matmul_accum(double* c, const double* a, const double* b,
                  std::size_t m, std::size_t k, std::size_t n);

// dst = max(x, 0). Negative zero maps to +0.
void relu(double* dst, const double* x, std::size_t n);

// dst = (x > 0) ? g : 0. The subgradient at x == 0 is 0.
void relu_grad(double* dst, const double* x, const double* g, std::size_t n);

// dst = a . b elementwise.
void hadamard(double* dst, const double* a, const double* b, std::size_t n);

// dst += alpha * x
void axpy(double* dst, double alpha, const double* x, std::size_t n);

// dst *= alpha
void scale(double* dst, double alpha, std::size_t n);

// velocity = mu * velocity + grad; param -= lr * velocity
void sgd_momentum(double* param, double* velocity, const double* grad,
                  double mu, double lr, std::size_t n);

}  // namespace ada::kernels
