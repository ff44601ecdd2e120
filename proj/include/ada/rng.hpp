#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace ada {

// Deterministic random source. std::mt19937_64 is fully specified by the
// standard; the distribution code lives here because the std::*_distribution
// classes are implementation-defined and would break cross-platform
// reproducibility of seeds.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : eng_(seed) {}

    std::uint64_t next_u64() { return eng_(); }

    // Uniform in [0, 1), 53-bit resolution.
    double uniform() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Standard normal via the polar (Marsaglia) method; spares are cached.
    double normal();

    // Unbiased integer in [0, n). n must be > 0.
    std::uint64_t below(std::uint64_t n);

    // Fisher-Yates with this engine. std::shuffle is not used because its
    // draw sequence is implementation-defined.
    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::size_t j = static_cast<std::size_t>(below(i));
            std::swap(v[i - 1], v[j]);
        }
    }

private:
    std::mt19937_64 eng_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace ada
