#pragma once

#include <cstdint>

#include "bfae/dataset.hpp"

namespace bfae {

/// Two-class curves shaped like log-periodograms: R = 1, M = 150 on [0, 1],
/// labels "aa" / "ao". Each curve is a decaying spectrum, a class-specific
/// low-frequency bump, a Matern-5/2 fluctuation and white noise.
struct PhonemeStandIn {
    Eigen::Index n_samples = 800;
    Eigen::Index n_points = 150;
    /// Height of the class-separating bump relative to the fluctuation scale.
    double separation = 0.5;
    double noise_sd = 1.0;
    std::uint64_t seed = 0;
};

FunctionalDataset make_phoneme_standin(const PhonemeStandIn& spec);

/// Paired temperature / demand datasets shaped like the Adelaide data:
/// R = 7 features monday..sunday, M = 48 half-hourly points on [0, 1].
/// Temperature shares a weekly Matern component across days; demand (MW) is
/// a smooth function-on-function linear map of same-day temperature plus noise.
struct AdelaideStandIn {
    Eigen::Index n_weeks = 508;
    Eigen::Index n_points = 48;
    double demand_noise_sd = 60.0;
    std::uint64_t seed = 0;
};

struct AdelaidePair {
    FunctionalDataset temperature;
    FunctionalDataset demand;
};

AdelaidePair make_adelaide_standin(const AdelaideStandIn& spec);

/// monday, tuesday, ..., sunday
std::vector<std::string> weekday_names();

}  // namespace bfae
