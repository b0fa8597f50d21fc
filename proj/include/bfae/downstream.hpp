#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "bfae/dataset.hpp"
#include "bfae/grid.hpp"

namespace bfae {

/// sqrt( (1/N) sum_i sum_r integral (X - Xhat)^2 ).
double functional_rmse(const Curves& truth, const Curves& estimate, const Grid& grid);

// ------------------------------------------------- functional logistic model

/// logit P(y = 1 | x) = alpha + sum_r <x_r, beta_r>.
struct FLMClassifier {
    std::vector<Eigen::VectorXd> beta;
    double alpha = 0.0;
    double ridge = 0.0;
    /// Penalized negative log-likelihood per iteration of the fit.
    std::vector<double> objective;
};

struct FLMFitOptions {
    Eigen::Index max_iterations = 5000;
    /// Stop once the functional gradient norm falls below this.
    double tolerance = 1e-8;
    double initial_step = 1.0;
};

/// Mean negative log-likelihood plus (ridge / 2) sum_r ||beta_r||^2 in L2.
double flm_objective(const FLMClassifier& model, const Curves& curves, const std::vector<int>& labels,
                     const Grid& grid);

/// Ridge-penalized logistic regression by gradient ascent on the
/// log-likelihood (descent on flm_objective) from beta = 0. Each step uses
/// the L2 gradient and halves the step until the objective decreases.
FLMClassifier flm_classify_fit(const Curves& curves, const std::vector<int>& labels, const Grid& grid, double ridge,
                               const FLMFitOptions& options = {});

struct FLMPrediction {
    std::vector<int> labels;
    Eigen::VectorXd probabilities;
};

FLMPrediction flm_classify_predict(const FLMClassifier& model, const Curves& curves, const Grid& grid);
double classification_error(const std::vector<int>& truth, const std::vector<int>& predicted);

/// Picks the ridge with the lowest validation log-loss on a seeded fifth of
/// the data, then refits on everything.
FLMClassifier flm_classify_fit_selected(const Curves& curves, const std::vector<int>& labels, const Grid& grid,
                                        const std::vector<double>& ridge_grid, std::uint64_t seed,
                                        const FLMFitOptions& options = {});

// --------------------------------------- function-on-function regression

/// yhat_q(s) = alpha_q(s) + sum_r integral beta_qr(s, t) x_r(t) dt.
struct FoFRegression {
    Grid in_grid;
    Grid out_grid;
    /// Per output feature, length M_out.
    std::vector<Eigen::VectorXd> intercepts;
    /// Index q * R_in + r, each M_out x M_in.
    std::vector<Eigen::MatrixXd> surfaces;
    Eigen::Index in_features = 0;
    double ridge = 0.0;
};

/// Minimizes (1/N) sum_i sum_q integral (y - yhat)^2 ds
///           + ridge sum_{q,r} double-integral beta_qr^2
/// in closed form; every output point shares one regularized normal system.
/// Requires ridge > 0.
FoFRegression fof_fit(const Curves& inputs, const Grid& in_grid, const Curves& outputs, const Grid& out_grid,
                      double ridge);
Curves fof_predict(const FoFRegression& model, const Curves& inputs);

FoFRegression fof_fit_selected(const Curves& inputs, const Grid& in_grid, const Curves& outputs, const Grid& out_grid,
                               const std::vector<double>& ridge_grid, std::uint64_t seed);

/// 1e-6, 1e-5, ..., 1.
std::vector<double> default_ridge_grid();

}  // namespace bfae
