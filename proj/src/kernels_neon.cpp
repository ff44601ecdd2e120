#include "kernels_impl.hpp"

// NEON variants (2 x f64 lanes), aarch64 only. Same discipline as the AVX2
// file: lanes mirror the scalar operation sequence exactly (mul then add,
// compare + bit-select for ReLU), so results stay bit-equal to the reference.

#if defined(__aarch64__)

#include <arm_neon.h>

namespace ada::kernels::detail {
namespace {

constexpr std::size_t kLanes = 2;

void matmul_accum_neon(double* c, const double* a, const double* b,
                       std::size_t m, std::size_t k, std::size_t n) {
    for (std::size_t i = 0; i < m; ++i) {
        double* ci = c + i * n;
        const double* ai = a + i * k;
        for (std::size_t p = 0; p < k; ++p) {
            const double av = ai[p];
            const float64x2_t avv = vdupq_n_f64(av);
            const double* bp = b + p * n;
            std::size_t j = 0;
            for (; j + kLanes <= n; j += kLanes) {
                float64x2_t cv = vld1q_f64(ci + j);
                cv = vaddq_f64(cv, vmulq_f64(avv, vld1q_f64(bp + j)));
                vst1q_f64(ci + j, cv);
            }
            for (; j < n; ++j) {
                ci[j] += av * bp[j];
            }
        }
    }
}

void relu_neon(double* dst, const double* x, std::size_t n) {
    const float64x2_t zero = vdupq_n_f64(0.0);
    std::size_t i = 0;
    for (; i + kLanes <= n; i += kLanes) {
        const float64x2_t xv = vld1q_f64(x + i);
        const uint64x2_t mask = vcgtq_f64(xv, zero);
        vst1q_f64(dst + i, vbslq_f64(mask, xv, zero));
    }
    for (; i < n; ++i) {
        dst[i] = x[i] > 0.0 ? x[i] : 0.0;
    }
}

void relu_grad_neon(double* dst, const double* x, const double* g,
                    std::size_t n) {
    const float64x2_t zero = vdupq_n_f64(0.0);
    std::size_t i = 0;
    for (; i + kLanes <= n; i += kLanes) {
        const float64x2_t xv = vld1q_f64(x + i);
        const float64x2_t gv = vld1q_f64(g + i);
        const uint64x2_t mask = vcgtq_f64(xv, zero);
        vst1q_f64(dst + i, vbslq_f64(mask, gv, zero));
    }
    for (; i < n; ++i) {
        dst[i] = x[i] > 0.0 ? g[i] : 0.0;
    }
}

void hadamard_neon(double* dst, const double* a, const double* b,
                   std::size_t n) {
    std::size_t i = 0;
    for (; i + kLanes <= n; i += kLanes) {
        vst1q_f64(dst + i, vmulq_f64(vld1q_f64(a + i), vld1q_f64(b + i)));
    }
    for (; i < n; ++i) {
        dst[i] = a[i] * b[i];
    }
}

void axpy_neon(double* dst, double alpha, const double* x, std::size_t n) {
    const float64x2_t av = vdupq_n_f64(alpha);
    std::size_t i = 0;
    for (; i + kLanes <= n; i += kLanes) {
        float64x2_t dv = vld1q_f64(dst + i);
        dv = vaddq_f64(dv, vmulq_f64(av, vld1q_f64(x + i)));
        vst1q_f64(dst + i, dv);
    }
    for (; i < n; ++i) {
        dst[i] += alpha * x[i];
    }
}

void scale_neon(double* dst, double alpha, std::size_t n) {
    const float64x2_t av = vdupq_n_f64(alpha);
    std::size_t i = 0;
    for (; i + kLanes <= n; i += kLanes) {
        vst1q_f64(dst + i, vmulq_f64(av, vld1q_f64(dst + i)));
    }
    for (; i < n; ++i) {
        dst[i] *= alpha;
    }
}

void sgd_momentum_neon(double* param, double* velocity, const double* grad,
                       double mu, double lr, std::size_t n) {
    const float64x2_t muv = vdupq_n_f64(mu);
    const float64x2_t lrv = vdupq_n_f64(lr);
    std::size_t i = 0;
    for (; i + kLanes <= n; i += kLanes) {
        float64x2_t vv = vld1q_f64(velocity + i);
        vv = vaddq_f64(vmulq_f64(muv, vv), vld1q_f64(grad + i));
        vst1q_f64(velocity + i, vv);
        float64x2_t pv = vld1q_f64(param + i);
        pv = vsubq_f64(pv, vmulq_f64(lrv, vv));
        vst1q_f64(param + i, pv);
    }
    for (; i < n; ++i) {
        velocity[i] = mu * velocity[i] + grad[i];
        param[i] -= lr * velocity[i];
    }
}

const Table kNeonTable = {
    matmul_accum_neon, relu_neon,  relu_grad_neon,    hadamard_neon,
    axpy_neon,         scale_neon, sgd_momentum_neon,
};

}  // namespace

const Table* neon_table() { return &kNeonTable; }

}  // namespace ada::kernels::detail

#else

namespace ada::kernels::detail {
const Table* neon_table() { return nullptr; }
}  // namespace ada::kernels::detail

#endif
