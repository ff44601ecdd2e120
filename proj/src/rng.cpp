#include "ada/rng.hpp"

#include <cmath>

namespace ada {

double Rng::normal() {
    if (have_spare_) {
        have_spare_ = false;
        return spare_;
    }
    double u, v, s;
    do {
        u = 2.0 * uniform() - 1.0;
        v = 2.0 * uniform() - 1.0;
        s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    const double f = std::sqrt(-2.0 * std::log(s) / s);
    spare_ = v * f;
    have_spare_ = true;
    return u * f;
}

std::uint64_t Rng::below(std::uint64_t n) {
    // Rejection sampling over the smallest power-of-two range covering n.
    const std::uint64_t mask = ~std::uint64_t{0} >> __builtin_clzll(n | 1);
    std::uint64_t x;
    do {
        x = eng_() & mask;
    } while (x >= n);
    return x;
}

}  // namespace ada
