#include "bfae/standins.hpp"

#include <cmath>
#include <numbers>

#include "bfae/error.hpp"
#include "bfae/gp.hpp"
#include "bfae/random.hpp"

namespace bfae {

namespace {

Eigen::VectorXd draw(const Eigen::MatrixXd& chol, Rng& rng) {
    Eigen::VectorXd z(chol.rows());
    for (Eigen::Index j = 0; j < z.size(); ++j) z[j] = rng.normal();
    return chol * z;
}

}  // namespace

std::vector<std::string> weekday_names() {
    return {"monday", "tuesday", "wednesday", "thursday", "friday", "saturday", "sunday"};
}

FunctionalDataset make_phoneme_standin(const PhonemeStandIn& spec) {
    if (spec.n_samples < 2 || spec.n_points < 2) throw Error(ErrorCode::invalid_argument, "phoneme stand-in is too small");
    const Grid grid = make_uniform_grid(0.0, 1.0, spec.n_points);
    const MaternParams fluctuation{1.0, 0.2, 2.5};
    const Eigen::MatrixXd chol = jittered_cholesky(cov_matrix(grid, fluctuation), fluctuation.sigma2);

    FunctionalDataset data{make_curves(1, spec.n_points, spec.n_samples), grid, {"log_periodogram"}, {}};
    for (Eigen::Index i = 0; i < spec.n_samples; ++i) {
        Rng rng(derive_seed(spec.seed, static_cast<std::uint64_t>(i)));
        const bool ao = rng.uniform() < 0.5;
        const Eigen::VectorXd fluct = draw(chol, rng);
        auto col = data.values[0].col(i);
        for (Eigen::Index j = 0; j < spec.n_points; ++j) {
            const double t = grid.point(j);
            const double spectrum = 18.0 - 14.0 * t + 3.0 * std::exp(-std::pow((t - 0.12) / 0.05, 2));
            // "ao" carries its formant energy slightly lower than "aa".
            const double centre = ao ? 0.22 : 0.30;
            const double bump = spec.separation * 2.0 * std::exp(-std::pow((t - centre) / 0.1, 2));
            col[j] = spectrum + bump + fluct[j] + spec.noise_sd * rng.normal();
        }
        data.labels.push_back(ao ? "ao" : "aa");
    }
    return data;
}

AdelaidePair make_adelaide_standin(const AdelaideStandIn& spec) {
    if (spec.n_weeks < 2 || spec.n_points < 2) throw Error(ErrorCode::invalid_argument, "adelaide stand-in is too small");
    const Eigen::Index m = spec.n_points;
    const Grid grid = make_uniform_grid(0.0, 1.0, m);
    const auto names = weekday_names();
    const Eigen::Index days = static_cast<Eigen::Index>(names.size());

    const MaternParams weekly{9.0, 0.4, 2.5};
    const MaternParams daily{2.0, 0.2, 2.5};
    const Eigen::MatrixXd chol_week = jittered_cholesky(cov_matrix(grid, weekly), weekly.sigma2);
    const Eigen::MatrixXd chol_day = jittered_cholesky(cov_matrix(grid, daily), daily.sigma2);

    // Demand responds to temperature through a smooth kernel peaking near
    // the same time of day, plus a daily load profile.
    Eigen::MatrixXd kernel(m, m);
    Eigen::VectorXd profile(m);
    for (Eigen::Index s = 0; s < m; ++s) {
        const double ts = grid.point(s);
        profile[s] = 1300.0 + 350.0 * std::sin(std::numbers::pi * ts) * std::sin(std::numbers::pi * ts) -
                     120.0 * std::cos(2.0 * std::numbers::pi * ts);
        for (Eigen::Index t = 0; t < m; ++t) {
            const double d = ts - grid.point(t);
            kernel(s, t) = 90.0 * std::exp(-d * d / (2.0 * 0.08 * 0.08)) / (0.08 * std::sqrt(2.0 * std::numbers::pi));
        }
    }

    AdelaidePair pair{{make_curves(days, m, spec.n_weeks), grid, names, {}},
                      {make_curves(days, m, spec.n_weeks), grid, names, {}}};
    for (Eigen::Index i = 0; i < spec.n_weeks; ++i) {
        Rng rng(derive_seed(spec.seed, static_cast<std::uint64_t>(i)));
        const double season = 6.0 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) / 52.0);
        const Eigen::VectorXd week = draw(chol_week, rng);
        for (Eigen::Index r = 0; r < days; ++r) {
            const Eigen::VectorXd day = draw(chol_day, rng);
            auto temp = pair.temperature.values[static_cast<std::size_t>(r)].col(i);
            for (Eigen::Index j = 0; j < m; ++j) {
                const double t = grid.point(j);
                const double diurnal = 15.0 - 5.0 * std::cos(2.0 * std::numbers::pi * (t - 0.1));
                temp[j] = diurnal + season + week[j] + day[j] + 0.3 * rng.normal();
            }
            const double weekend = r >= 5 ? -150.0 : 0.0;
            const Eigen::VectorXd centred = temp.array() - 18.0;
            Eigen::VectorXd load = profile + kernel * (grid.weights().asDiagonal() * centred.cwiseAbs());
            auto demand = pair.demand.values[static_cast<std::size_t>(r)].col(i);
            for (Eigen::Index j = 0; j < m; ++j) demand[j] = load[j] + weekend + spec.demand_noise_sd * rng.normal();
        }
    }
    return pair;
}

}  // namespace bfae
