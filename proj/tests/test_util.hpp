#pragma once

#include <cstdint>

#include "bfae/dataset.hpp"
#include "bfae/random.hpp"

namespace bfae::testing {

inline Curves random_curves(Eigen::Index r, Eigen::Index m, Eigen::Index n, std::uint64_t seed, double scale = 1.0) {
    Rng rng(seed);
    Curves c = make_curves(r, m, n);
    for (auto& block : c)
        for (Eigen::Index j = 0; j < block.size(); ++j) block.data()[j] = scale * rng.normal();
    return c;
}

inline double rel_err(double a, double b) {
    const double scale = std::max({std::abs(a), std::abs(b), 1e-8});
    return std::abs(a - b) / scale;
}

}  // namespace bfae::testing
