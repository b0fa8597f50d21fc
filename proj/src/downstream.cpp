#include "bfae/downstream.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "bfae/dataset_io.hpp"
#include "bfae/error.hpp"
#include "bfae/model.hpp"

namespace bfae {

double functional_rmse(const Curves& truth, const Curves& estimate, const Grid& grid) {
    return std::sqrt(reconstruction_loss(truth, estimate, grid));
}

namespace {

double softplus(double x) { return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }

double sigmoid(double x) {
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

void check_labels(const Curves& curves, const std::vector<int>& labels) {
    if (static_cast<Eigen::Index>(labels.size()) != curve_samples(curves)) {
        throw Error(ErrorCode::shape_mismatch, "label count does not match sample count");
    }
    bool has0 = false;
    bool has1 = false;
    for (int y : labels) {
        if (y != 0 && y != 1) throw Error(ErrorCode::invalid_argument, "labels must be 0 or 1");
        has0 = has0 || y == 0;
        has1 = has1 || y == 1;
    }
    if (!(has0 && has1)) throw Error(ErrorCode::single_class, "both classes must be present");
}

Eigen::VectorXd linear_predictor(const FLMClassifier& model, const Curves& curves, const Grid& grid) {
    check_curves(curves, static_cast<Eigen::Index>(model.beta.size()), grid.size(), -1, "classifier input");
    Eigen::VectorXd eta = Eigen::VectorXd::Constant(curve_samples(curves), model.alpha);
    for (std::size_t r = 0; r < curves.size(); ++r) {
        eta.noalias() += curves[r].transpose() * (grid.weights().array() * model.beta[r].array()).matrix();
    }
    return eta;
}

double objective_from_eta(const FLMClassifier& model, const Eigen::VectorXd& eta, const std::vector<int>& labels,
                          const Grid& grid) {
    double nll = 0.0;
    for (Eigen::Index i = 0; i < eta.size(); ++i) nll += softplus(eta[i]) - labels[static_cast<std::size_t>(i)] * eta[i];
    double penalty = 0.0;
    for (const auto& b : model.beta) penalty += (grid.weights().array() * b.array().square()).sum();
    return nll / static_cast<double>(eta.size()) + 0.5 * model.ridge * penalty;
}

double log_loss(const FLMClassifier& model, const Curves& curves, const std::vector<int>& labels, const Grid& grid) {
    const Eigen::VectorXd eta = linear_predictor(model, curves, grid);
    double total = 0.0;
    for (Eigen::Index i = 0; i < eta.size(); ++i) total += softplus(eta[i]) - labels[static_cast<std::size_t>(i)] * eta[i];
    return total / static_cast<double>(eta.size());
}

template <typename T>
std::vector<T> pick(const std::vector<T>& v, const std::vector<Eigen::Index>& idx) {
    std::vector<T> out;
    out.reserve(idx.size());
    for (auto i : idx) out.push_back(v[static_cast<std::size_t>(i)]);
    return out;
}

bool both_classes(const std::vector<int>& labels) {
    bool has0 = false;
    bool has1 = false;
    for (int y : labels) (y == 0 ? has0 : has1) = true;
    return has0 && has1;
}

}  // namespace

double flm_objective(const FLMClassifier& model, const Curves& curves, const std::vector<int>& labels,
                     const Grid& grid) {
    return objective_from_eta(model, linear_predictor(model, curves, grid), labels, grid);
}

FLMClassifier flm_classify_fit(const Curves& curves, const std::vector<int>& labels, const Grid& grid, double ridge,
                               const FLMFitOptions& options) {
    check_curves(curves, -1, grid.size(), -1, "classifier input");
    check_labels(curves, labels);
    if (!(ridge >= 0.0)) throw Error(ErrorCode::invalid_argument, "ridge must be >= 0");
    const Eigen::Index n = curve_samples(curves);
    const Eigen::Index m = grid.size();
    FLMClassifier model;
    model.beta.assign(curves.size(), Eigen::VectorXd::Zero(m));
    model.ridge = ridge;
    Eigen::VectorXd y(n);
    for (Eigen::Index i = 0; i < n; ++i) y[i] = labels[static_cast<std::size_t>(i)];

    Eigen::VectorXd eta = linear_predictor(model, curves, grid);
    double current = objective_from_eta(model, eta, labels, grid);
    model.objective.push_back(current);
    double step = options.initial_step;
    for (Eigen::Index iter = 0; iter < options.max_iterations; ++iter) {
        Eigen::VectorXd resid(n);
        for (Eigen::Index i = 0; i < n; ++i) resid[i] = sigmoid(eta[i]) - y[i];
        resid /= static_cast<double>(n);
        // L2 gradient of the objective with respect to each beta_r.
        std::vector<Eigen::VectorXd> g_beta;
        double norm2 = 0.0;
        for (std::size_t r = 0; r < curves.size(); ++r) {
            g_beta.push_back(curves[r] * resid + ridge * model.beta[r]);
            norm2 += (grid.weights().array() * g_beta.back().array().square()).sum();
        }
        const double g_alpha = resid.sum();
        norm2 += g_alpha * g_alpha;
        if (std::sqrt(norm2) < options.tolerance) break;

        bool improved = false;
        for (int halving = 0; halving < 60; ++halving) {
            FLMClassifier trial = model;
            trial.alpha -= step * g_alpha;
            for (std::size_t r = 0; r < curves.size(); ++r) trial.beta[r] -= step * g_beta[r];
            const Eigen::VectorXd trial_eta = linear_predictor(trial, curves, grid);
            const double value = objective_from_eta(trial, trial_eta, labels, grid);
            // Armijo sufficient decrease.
            if (value <= current - 1e-4 * step * norm2) {
                model.alpha = trial.alpha;
                model.beta = std::move(trial.beta);
                eta = trial_eta;
                current = value;
                improved = true;
                break;
            }
            step *= 0.5;
        }
        model.objective.push_back(current);
        if (!improved) break;
        step *= 2.0;
    }
    return model;
}

FLMPrediction flm_classify_predict(const FLMClassifier& model, const Curves& curves, const Grid& grid) {
    const Eigen::VectorXd eta = linear_predictor(model, curves, grid);
    FLMPrediction out;
    out.probabilities = eta.unaryExpr([](double v) { return sigmoid(v); });
    for (Eigen::Index i = 0; i < eta.size(); ++i) out.labels.push_back(out.probabilities[i] >= 0.5 ? 1 : 0);
    return out;
}

double classification_error(const std::vector<int>& truth, const std::vector<int>& predicted) {
    if (truth.size() != predicted.size() || truth.empty()) {
        throw Error(ErrorCode::shape_mismatch, "label vectors must be non-empty and of equal length");
    }
    std::size_t wrong = 0;
    for (std::size_t i = 0; i < truth.size(); ++i) wrong += truth[i] != predicted[i] ? 1 : 0;
    return static_cast<double>(wrong) / static_cast<double>(truth.size());
}

FLMClassifier flm_classify_fit_selected(const Curves& curves, const std::vector<int>& labels, const Grid& grid,
                                        const std::vector<double>& ridge_grid, std::uint64_t seed,
                                        const FLMFitOptions& options) {
    check_labels(curves, labels);
    if (ridge_grid.empty()) throw Error(ErrorCode::invalid_argument, "empty ridge grid");
    double best_ridge = ridge_grid.front();
    if (ridge_grid.size() > 1) {
        const SplitIndices idx = split_indices(curve_samples(curves), {0.8, seed, true});
        const auto fit_labels = pick(labels, idx.train);
        const auto val_labels = pick(labels, idx.test);
        if (both_classes(fit_labels)) {
            const Curves fit_curves = select_samples(curves, idx.train);
            const Curves val_curves = select_samples(curves, idx.test);
            double best = std::numeric_limits<double>::infinity();
            for (double ridge : ridge_grid) {
                const FLMClassifier candidate = flm_classify_fit(fit_curves, fit_labels, grid, ridge, options);
                const double loss = log_loss(candidate, val_curves, val_labels, grid);
                if (loss < best) {
                    best = loss;
                    best_ridge = ridge;
                }
            }
        }
    }
    return flm_classify_fit(curves, labels, grid, best_ridge, options);
}

FoFRegression fof_fit(const Curves& inputs, const Grid& in_grid, const Curves& outputs, const Grid& out_grid,
                      double ridge) {
    check_curves(inputs, -1, in_grid.size(), -1, "regression inputs");
    const Eigen::Index n = curve_samples(inputs);
    check_curves(outputs, -1, out_grid.size(), n, "regression outputs");
    if (n < 2) throw Error(ErrorCode::invalid_argument, "regression needs at least 2 samples");
    if (!(ridge > 0.0)) throw Error(ErrorCode::singular_system, "function-on-function regression requires ridge > 0");

    const Eigen::Index m_in = in_grid.size();
    const Eigen::Index r_in = curve_features(inputs);
    const Eigen::MatrixXd x = flatten(inputs);
    Eigen::VectorXd q(r_in * m_in);
    for (Eigen::Index r = 0; r < r_in; ++r) q.segment(r * m_in, m_in) = in_grid.weights();
    const Eigen::MatrixXd z = x * q.asDiagonal();
    const Eigen::MatrixXd y = flatten(outputs);
    const Eigen::RowVectorXd z_mean = z.colwise().mean();
    const Eigen::RowVectorXd y_mean = y.colwise().mean();
    const Eigen::MatrixXd zc = z.rowwise() - z_mean;
    const Eigen::MatrixXd yc = y.rowwise() - y_mean;

    const double inv_n = 1.0 / static_cast<double>(n);
    Eigen::MatrixXd normal = inv_n * (zc.transpose() * zc);
    normal.diagonal() += ridge * q;
    Eigen::LLT<Eigen::MatrixXd> llt(normal);
    if (llt.info() != Eigen::Success) throw Error(ErrorCode::singular_system, "normal equations are not positive definite");
    const Eigen::MatrixXd coef = llt.solve(inv_n * (zc.transpose() * yc));  // (R_in M_in) x (R_out M_out)
    const Eigen::RowVectorXd intercept = y_mean - z_mean * coef;

    FoFRegression model{in_grid, out_grid, {}, {}, r_in, ridge};
    const Eigen::Index m_out = out_grid.size();
    const Eigen::Index r_out = curve_features(outputs);
    for (Eigen::Index qo = 0; qo < r_out; ++qo) {
        model.intercepts.emplace_back(intercept.segment(qo * m_out, m_out).transpose());
        for (Eigen::Index r = 0; r < r_in; ++r) {
            model.surfaces.emplace_back(coef.block(r * m_in, qo * m_out, m_in, m_out).transpose());
        }
    }
    return model;
}

Curves fof_predict(const FoFRegression& model, const Curves& inputs) {
    check_curves(inputs, model.in_features, model.in_grid.size(), -1, "regression inputs");
    const Eigen::Index n = curve_samples(inputs);
    Curves scaled;
    for (const auto& block : inputs) scaled.emplace_back(model.in_grid.weights().asDiagonal() * block);
    Curves out;
    for (std::size_t qo = 0; qo < model.intercepts.size(); ++qo) {
        Eigen::MatrixXd block = model.intercepts[qo].replicate(1, n);
        for (Eigen::Index r = 0; r < model.in_features; ++r) {
            block.noalias() += model.surfaces[qo * static_cast<std::size_t>(model.in_features) + static_cast<std::size_t>(r)] *
                               scaled[static_cast<std::size_t>(r)];
        }
        out.push_back(std::move(block));
    }
    return out;
}

FoFRegression fof_fit_selected(const Curves& inputs, const Grid& in_grid, const Curves& outputs, const Grid& out_grid,
                               const std::vector<double>& ridge_grid, std::uint64_t seed) {
    if (ridge_grid.empty()) throw Error(ErrorCode::invalid_argument, "empty ridge grid");
    double best_ridge = ridge_grid.front();
    const Eigen::Index n = curve_samples(inputs);
    if (ridge_grid.size() > 1 && n >= 10) {
        const SplitIndices idx = split_indices(n, {0.8, seed, true});
        const Curves fit_x = select_samples(inputs, idx.train);
        const Curves fit_y = select_samples(outputs, idx.train);
        const Curves val_x = select_samples(inputs, idx.test);
        const Curves val_y = select_samples(outputs, idx.test);
        double best = std::numeric_limits<double>::infinity();
        for (double ridge : ridge_grid) {
            const FoFRegression candidate = fof_fit(fit_x, in_grid, fit_y, out_grid, ridge);
            const double err = functional_rmse(val_y, fof_predict(candidate, val_x), out_grid);
            if (err < best) {
                best = err;
                best_ridge = ridge;
            }
        }
    }
    return fof_fit(inputs, in_grid, outputs, out_grid, best_ridge);
}

std::vector<double> default_ridge_grid() { return {1e-6, 1e-5, 1e-4, 1e-3, 1e-2, 1e-1, 1.0}; }

}  // namespace bfae
