#include "ada/kernels.hpp"

#include <cstdlib>
#include <cstring>

#include "kernels_impl.hpp"

namespace ada::kernels {
namespace {

using detail::Table;

struct Dispatch {
    const Table* table;
    Backend backend;
};

const Table* table_for(Backend b) {
    switch (b) {
        case Backend::Scalar: return detail::scalar_table();
        case Backend::Avx2:
            return detail::cpu_supports_avx2() ? detail::avx2_table() : nullptr;
        case Backend::Neon: return detail::neon_table();
    }
    return nullptr;
}

Backend pick_default() {
    if (const char* env = std::getenv("ADA_KERNELS")) {
        if (std::strcmp(env, "scalar") == 0) return Backend::Scalar;
        if (std::strcmp(env, "avx2") == 0 && table_for(Backend::Avx2))
            return Backend::Avx2;
        if (std::strcmp(env, "neon") == 0 && table_for(Backend::Neon))
            return Backend::Neon;
        // Unknown or unsupported request: fall through to auto-detection.
    }
    if (table_for(Backend::Avx2)) return Backend::Avx2;
    if (table_for(Backend::Neon)) return Backend::Neon;
    return Backend::Scalar;
}

Dispatch& dispatch() {
    static Dispatch d = [] {
        Backend b = pick_default();
        return Dispatch{table_for(b), b};
    }();
    return d;
}

}  // namespace

Backend active() { return dispatch().backend; }

const char* backend_name(Backend b) {
    switch (b) {
        case Backend::Scalar: return "scalar";
        case Backend::Avx2: return "avx2";
        case Backend::Neon: return "neon";
    }
    return "?";
}

std::vector<Backend> available() {
    std::vector<Backend> out{Backend::Scalar};
    if (table_for(Backend::Avx2)) out.push_back(Backend::Avx2);
    if (table_for(Backend::Neon)) out.push_back(Backend::Neon);
    return out;
}

bool set_backend(Backend b) {
    const Table* t = table_for(b);
    if (!t) return false;
    dispatch() = Dispatch{t, b};
    return true;
}

void matmul_accum(double* c, const double* a, const double* b, std::size_t m,
                  std::size_t k, std::size_t n) {
    dispatch().table->matmul_accum(c, a, b, m, k, n);
}

void relu(double* dst, const double* x, std::size_t n) {
    dispatch().table->relu(dst, x, n);
}

void relu_grad(double* dst, const double* x, const double* g, std::size_t n) {
    dispatch().table->relu_grad(dst, x, g, n);
}

void hadamard(double* dst, const double* a, const double* b, std::size_t n) {
    dispatch().table->hadamard(dst, a, b, n);
}

void axpy(double* dst, double alpha, const double* x, std::size_t n) {
    dispatch().table->axpy(dst, alpha, x, n);
}

void scale(double* dst, double alpha, std::size_t n) {
    dispatch().table->scale(dst, alpha, n);
}

void sgd_momentum(double* param, double* velocity, const double* grad,
                  double mu, double lr, std::size_t n) {
    dispatch().table->sgd_momentum(param, velocity, grad, mu, lr, n);
}

}  // namespace ada::kernels

namespace ada::kernels::detail {

bool cpu_supports_avx2() {
#if (defined(__x86_64__) || defined(_M_X64)) && (defined(__GNUC__) || defined(__clang__))
    return __builtin_cpu_supports("avx2");
#else
    return false;
#endif
}

}  // namespace ada::kernels::detail
