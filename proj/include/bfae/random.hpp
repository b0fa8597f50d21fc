#pragma once

#include <cstdint>
#include <random>

namespace bfae {

/// SplitMix64 finalizer; mixes (seed, stream) into an independent seed.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

/// Seeded generator with a fixed, documented algorithm so that every run is
/// bit-reproducible across standard libraries:
///   - engine: std::mt19937_64 (the standard fixes its output sequence),
///   - uniform(): top 53 bits of one engine draw, scaled to [0, 1),
///   - normal(): Box-Muller on two uniform() draws, caching the sine branch.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    double uniform();
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
    double normal();
    /// Uniform integer in [0, n).
    std::uint64_t below(std::uint64_t n);

    template <typename It>
    void shuffle(It first, It last) {
        // Fisher-Yates driven by below(); std::shuffle is implementation-defined.
        const auto n = static_cast<std::uint64_t>(last - first);
        for (std::uint64_t i = n; i > 1; --i) {
            const auto j = below(i);
            std::swap(first[i - 1], first[j]);
        }
    }

private:
    std::mt19937_64 engine_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace bfae
