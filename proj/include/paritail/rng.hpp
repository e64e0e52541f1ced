#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string_view>

namespace paritail {

// All randomness in the project flows from a single 64-bit scenario seed.
// Child streams are derived by hashing (root seed, module name, index) with
// FNV-1a, so ensemble members are independent of execution order and a run
// is reproducible from its seed alone.
inline std::uint64_t child_seed(std::uint64_t root, std::string_view module,
                                std::uint64_t index) {
    std::uint64_t h = 14695981039346656037ull;
    auto mix = [&h](std::uint64_t v) {
        for (int i = 0; i < 8; ++i) {
            h ^= (v >> (8 * i)) & 0xffu;
            h *= 1099511628211ull;
        }
    };
    mix(root);
    for (char c : module) {
        h ^= static_cast<unsigned char>(c);
        h *= 1099511628211ull;
    }
    mix(index);
    return h;
}

// Thin wrapper over mt19937_64 with explicit, implementation-independent
// mappings to doubles. std::uniform_real_distribution is not pinned by the
// standard, so byte-identical outputs require doing the mapping ourselves.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    /// Uniform draw in [0, 1).
    double uniform() {
        return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    }

    /// Uniform draw in [lo, hi).
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Exponential inter-arrival via inverse CDF; rate > 0. The draw is
    /// clamped away from u = 0 so inter-arrival times are strictly positive
    /// and event timestamps never collide.
    double exponential(double rate) {
        double u = uniform();
        if (u == 0.0) u = 0x1.0p-53;
        return -std::log1p(-u) / rate;
    }

    /// Uniform index in [0, n). n must be >= 1.
    std::size_t index(std::size_t n) {
        return static_cast<std::size_t>(uniform() * static_cast<double>(n)) % n;
    }

    std::uint64_t raw() { return engine_(); }

  private:
    std::mt19937_64 engine_;
};

}  // namespace paritail
