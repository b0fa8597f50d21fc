#include "bfae/gp.hpp"

#include <cmath>

#include "bfae/error.hpp"
#include "bfae/random.hpp"

namespace bfae {

void MaternParams::validate() const {
    if (!(sigma2 > 0.0)) throw Error(ErrorCode::invalid_argument, "matern sigma2 must be positive");
    if (!(rho > 0.0)) throw Error(ErrorCode::invalid_argument, "matern rho must be positive");
    if (nu != 2.5) throw Error(ErrorCode::invalid_argument, "only nu = 2.5 is supported");
}

void SimConfig::validate() const {
    matern.validate();
    if (n_samples < 1) throw Error(ErrorCode::invalid_argument, "n_samples must be >= 1");
    if (n_features < 1) throw Error(ErrorCode::invalid_argument, "n_features must be >= 1");
    if (!(noise_sd >= 0.0)) throw Error(ErrorCode::invalid_argument, "noise_sd must be >= 0");
}

double matern52_cov(double t, double s, const MaternParams& p) {
    const double scaled = std::sqrt(5.0) * std::abs(t - s) / p.rho;
    return p.sigma2 * (1.0 + scaled + scaled * scaled / 3.0) * std::exp(-scaled);
}

Eigen::MatrixXd cov_matrix(const Grid& grid, const MaternParams& p) {
    p.validate();
    const Eigen::Index m = grid.size();
    Eigen::MatrixXd k(m, m);
    for (Eigen::Index i = 0; i < m; ++i) {
        k(i, i) = p.sigma2;
        for (Eigen::Index j = 0; j < i; ++j) {
            k(i, j) = matern52_cov(grid.point(i), grid.point(j), p);
            k(j, i) = k(i, j);
        }
    }
    return k;
}

Eigen::MatrixXd jittered_cholesky(const Eigen::MatrixXd& k, double sigma2) {
    const Eigen::Index m = k.rows();
    for (double jitter = 1e-10; jitter <= 1e-6 * (1.0 + 1e-9); jitter *= 10.0) {
        Eigen::MatrixXd a = k;
        a.diagonal().array() += jitter * sigma2;
        Eigen::LLT<Eigen::MatrixXd> llt(a);
        if (llt.info() == Eigen::Success) return llt.matrixL();
    }
    throw Error(ErrorCode::cholesky_failure,
                "covariance matrix of size " + std::to_string(m) + " is not positive definite after jitter");
}

FunctionalDataset sample_gp(const SimConfig& cfg) {
    cfg.validate();
    const Eigen::Index m = cfg.grid.size();
    const Eigen::MatrixXd chol = jittered_cholesky(cov_matrix(cfg.grid, cfg.matern), cfg.matern.sigma2);

    FunctionalDataset data{make_curves(cfg.n_features, m, cfg.n_samples), cfg.grid,
                           default_feature_names(cfg.n_features), {}};
    Eigen::VectorXd z(m);
    for (Eigen::Index i = 0; i < cfg.n_samples; ++i) {
        Rng rng(derive_seed(cfg.seed, static_cast<std::uint64_t>(i)));
        for (Eigen::Index r = 0; r < cfg.n_features; ++r) {
            for (Eigen::Index j = 0; j < m; ++j) z[j] = rng.normal();
            data.values[static_cast<std::size_t>(r)].col(i) = chol * z;
        }
        if (cfg.noise_sd > 0.0) {
            for (Eigen::Index r = 0; r < cfg.n_features; ++r) {
                auto col = data.values[static_cast<std::size_t>(r)].col(i);
                for (Eigen::Index j = 0; j < m; ++j) col[j] += cfg.noise_sd * rng.normal();
            }
        }
    }
    return data;
}

}  // namespace bfae
