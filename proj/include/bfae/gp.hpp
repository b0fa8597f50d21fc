#pragma once

#include <cstdint>

#include <Eigen/Dense>

#include "bfae/dataset.hpp"
#include "bfae/grid.hpp"

namespace bfae {

/// Matern covariance parameters. Only nu = 5/2 is supported.
struct MaternParams {
    double sigma2 = 1.0;
    double rho = 0.5;
    double nu = 2.5;

    void validate() const;
};

struct SimConfig {
    Eigen::Index n_samples = 100;
    Eigen::Index n_features = 1;
    Grid grid = make_uniform_grid(0.0, 1.0, 50);
    MaternParams matern;
    double noise_sd = 0.1;
    std::uint64_t seed = 0;

    void validate() const;
};

/// sigma2 (1 + sqrt(5) d / rho + 5 d^2 / (3 rho^2)) exp(-sqrt(5) d / rho), d = |t - s|.
double matern52_cov(double t, double s, const MaternParams& p);

/// Gram matrix of the kernel over the grid points.
Eigen::MatrixXd cov_matrix(const Grid& grid, const MaternParams& p);

/// Lower Cholesky factor of K + jitter I. Jitter starts at 1e-10 sigma2 and
/// grows tenfold up to 1e-6 sigma2; throws cholesky-failure past that.
Eigen::MatrixXd jittered_cholesky(const Eigen::MatrixXd& k, double sigma2);

/// N x R x M draws of a zero-mean GP plus iid N(0, noise_sd^2) noise.
/// Sample i draws from its own substream derive_seed(seed, i); within a
/// sample, features are drawn in order, each from M standard normals.
FunctionalDataset sample_gp(const SimConfig& cfg);

}  // namespace bfae
