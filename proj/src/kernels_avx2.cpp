#include "kernels_impl.hpp"

// AVX2 variants (4 x f64 lanes). Vectorization runs across independent
// output elements only, so every lane performs exactly the scalar reference's
// operation sequence: mul then add, never FMA. That keeps results bit-equal
// to kernels_scalar.cpp, which the equivalence tests assert.

#if defined(__x86_64__) || defined(_M_X64)

#include <immintrin.h>

namespace ada::kernels::detail {
namespace {

constexpr std::size_t kLanes = 4;

void matmul_accum_avx2(double* c, const double* a, const double* b,
                       std::size_t m, std::size_t k, std::size_t n) {
    for (std::size_t i = 0; i < m; ++i) {
        double* ci = c + i * n;
        const double* ai = a + i * k;
        for (std::size_t p = 0; p < k; ++p) {
            const double av = ai[p];
            const __m256d avv = _mm256_set1_pd(av);
            const double* bp = b + p * n;
            std::size_t j = 0;
            for (; j + kLanes <= n; j += kLanes) {
                __m256d cv = _mm256_loadu_pd(ci + j);
                cv = _mm256_add_pd(cv, _mm256_mul_pd(avv, _mm256_loadu_pd(bp + j)));
                _mm256_storeu_pd(ci + j, cv);
            }
            for (; j < n; ++j) {
                ci[j] += av * bp[j];
            }
        }
    }
}

void relu_avx2(double* dst, const double* x, std::size_t n) {
    const __m256d zero = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + kLanes <= n; i += kLanes) {
        const __m256d xv = _mm256_loadu_pd(x + i);
        const __m256d mask = _mm256_cmp_pd(xv, zero, _CMP_GT_OQ);
        _mm256_storeu_pd(dst + i, _mm256_and_pd(mask, xv));
    }
    for (; i < n; ++i) {
        dst[i] = x[i] > 0.0 ? x[i] : 0.0;
    }
}

void relu_grad_avx2(double* dst, const double* x, const double* g,
                    std::size_t n) {
    const __m256d zero = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + kLanes <= n; i += kLanes) {
        const __m256d xv = _mm256_loadu_pd(x + i);
        const __m256d gv = _mm256_loadu_pd(g + i);
        const __m256d mask = _mm256_cmp_pd(xv, zero, _CMP_GT_OQ);
        _mm256_storeu_pd(dst + i, _mm256_and_pd(mask, gv));
    }
    for (; i < n; ++i) {
        dst[i] = x[i] > 0.0 ? g[i] : 0.0;
    }
}

void hadamard_avx2(double* dst, const double* a, const double* b,
                   std::size_t n) {
    std::size_t i = 0;
    for (; i + kLanes <= n; i += kLanes) {
        _mm256_storeu_pd(dst + i, _mm256_mul_pd(_mm256_loadu_pd(a + i),
                                                _mm256_loadu_pd(b + i)));
    }
    for (; i < n; ++i) {
        dst[i] = a[i] * b[i];
    }
}

void axpy_avx2(double* dst, double alpha, const double* x, std::size_t n) {
    const __m256d av = _mm256_set1_pd(alpha);
    std::size_t i = 0;
    for (; i + kLanes <= n; i += kLanes) {
        __m256d dv = _mm256_loadu_pd(dst + i);
        dv = _mm256_add_pd(dv, _mm256_mul_pd(av, _mm256_loadu_pd(x + i)));
        _mm256_storeu_pd(dst + i, dv);
    }
    for (; i < n; ++i) {
        dst[i] += alpha * x[i];
    }
}

void scale_avx2(double* dst, double alpha, std::size_t n) {
    const __m256d av = _mm256_set1_pd(alpha);
    std::size_t i = 0;
    for (; i + kLanes <= n; i += kLanes) {
        _mm256_storeu_pd(dst + i, _mm256_mul_pd(av, _mm256_loadu_pd(dst + i)));
    }
    for (; i < n; ++i) {
        dst[i] *= alpha;
    }
}

void sgd_momentum_avx2(double* param, double* velocity, const double* grad,
                       double mu, double lr, std::size_t n) {
    const __m256d muv = _mm256_set1_pd(mu);
    const __m256d lrv = _mm256_set1_pd(lr);
    std::size_t i = 0;
    for (; i + kLanes <= n; i += kLanes) {
        __m256d vv = _mm256_loadu_pd(velocity + i);
        vv = _mm256_add_pd(_mm256_mul_pd(muv, vv), _mm256_loadu_pd(grad + i));
        _mm256_storeu_pd(velocity + i, vv);
        __m256d pv = _mm256_loadu_pd(param + i);
        pv = _mm256_sub_pd(pv, _mm256_mul_pd(lrv, vv));
        _mm256_storeu_pd(param + i, pv);
    }
    for (; i < n; ++i) {
        velocity[i] = mu * velocity[i] + grad[i];
        param[i] -= lr * velocity[i];
    }
}

const Table kAvx2Table = {
    matmul_accum_avx2, relu_avx2,  relu_grad_avx2,    hadamard_avx2,
    axpy_avx2,         scale_avx2, sgd_momentum_avx2,
};

}  // namespace

const Table* avx2_table() { return &kAvx2Table; }

}  // namespace ada::kernels::detail

#else

namespace ada::kernels::detail {
const Table* avx2_table() { return nullptr; }
}  // namespace ada::kernels::detail

#endif
