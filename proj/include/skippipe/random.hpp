#pragma once

#include <cstdint>
#include <random>

namespace skippipe {

/// mt19937_64 with distribution code kept local so sampled values are
/// identical across standard library implementations.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    /// Uniform integer in [0, bound).
    std::uint64_t below(std::uint64_t bound) {
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
        std::uint64_t x;
        do {
            x = engine_();
        } while (x >= limit);
        return x % bound;
    }

private:
    std::mt19937_64 engine_;
};

/// splitmix64 step, for deriving independent child seeds from a master seed.
constexpr std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) {
    std::uint64_t z = master + 0x9e3779b97f4a7c15ULL * (index + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

}  // namespace skippipe
