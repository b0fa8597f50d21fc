#include "bfae/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <tuple>

#include "bfae/error.hpp"
#include "bfae/random.hpp"

namespace bfae {

Eigen::Index retained_count(const Eigen::VectorXd& eigenvalues, const RetentionRule& rule) {
    const Eigen::Index n = eigenvalues.size();
    if (n == 0) return 0;
    if (rule.fixed_count > 0) return std::min(rule.fixed_count, n);
    if (!(rule.variance_target > 0.0 && rule.variance_target <= 1.0)) {
        throw Error(ErrorCode::invalid_argument, "variance target must be in (0, 1]");
    }
    const double total = eigenvalues.cwiseMax(0.0).sum();
    double cumulative = 0.0;
    for (Eigen::Index k = 0; k < n; ++k) {
        cumulative += std::max(eigenvalues[k], 0.0);
        // Relative slack absorbs round-off when the target is exactly reached.
        if (cumulative >= rule.variance_target * total * (1.0 - 1e-12)) return k + 1;
    }
    return n;
}

namespace {

// Largest-magnitude entry positive; fixes the SVD/eigen sign ambiguity.
void canonical_signs(Eigen::MatrixXd& columns) {
    for (Eigen::Index k = 0; k < columns.cols(); ++k) {
        Eigen::Index idx = 0;
        columns.col(k).cwiseAbs().maxCoeff(&idx);
        if (columns(idx, k) < 0.0) columns.col(k) *= -1.0;
    }
}

}  // namespace

PCAModel pca_fit(const Eigen::MatrixXd& data, const RetentionRule& rule) {
    if (data.rows() < 2) throw Error(ErrorCode::invalid_argument, "PCA needs at least 2 samples");
    if (!data.allFinite()) throw Error(ErrorCode::non_finite, "PCA input has non-finite values");
    PCAModel model;
    model.mean = data.colwise().mean().transpose();
    const Eigen::MatrixXd centered = data.rowwise() - model.mean.transpose();
    Eigen::BDCSVD<Eigen::MatrixXd> svd(centered, Eigen::ComputeThinV);
    const Eigen::VectorXd variances = svd.singularValues().array().square() / static_cast<double>(data.rows() - 1);
    const double total = variances.sum();
    if (!(total > 0.0)) throw Error(ErrorCode::degenerate_data, "data has zero variance");
    model.explained_ratio = variances / total;
    const Eigen::Index k = retained_count(variances, rule);
    model.components = svd.matrixV().leftCols(k);
    canonical_signs(model.components);
    model.variances = variances.head(k);
    return model;
}

Eigen::MatrixXd pca_encode(const PCAModel& model, const Eigen::MatrixXd& data) {
    if (data.cols() != model.mean.size()) {
        throw Error(ErrorCode::shape_mismatch, "PCA input width " + std::to_string(data.cols()) + " != " +
                                                   std::to_string(model.mean.size()));
    }
    return (data.rowwise() - model.mean.transpose()) * model.components;
}

Eigen::MatrixXd pca_reconstruct(const PCAModel& model, const Eigen::MatrixXd& scores) {
    if (scores.cols() != model.k()) {
        throw Error(ErrorCode::shape_mismatch, "score width " + std::to_string(scores.cols()) + " != K " +
                                                   std::to_string(model.k()));
    }
    Eigen::MatrixXd out = scores * model.components.transpose();
    out.rowwise() += model.mean.transpose();
    return out;
}

Eigen::Index FPCAModel::total_components() const {
    Eigen::Index k = 0;
    for (const auto& phi : eigenfunctions) k += phi.cols();
    return k;
}

FPCAModel fpca_fit(const Curves& data, const Grid& grid, const RetentionRule& rule) {
    check_curves(data, -1, grid.size(), -1, "FPCA input");
    const Eigen::Index n = curve_samples(data);
    if (n < 2) throw Error(ErrorCode::invalid_argument, "FPCA needs at least 2 samples");
    if (!all_finite(data)) throw Error(ErrorCode::non_finite, "FPCA input has non-finite values");
    const Eigen::VectorXd sqrt_w = grid.weights().cwiseSqrt();
    const Eigen::VectorXd inv_sqrt_w = sqrt_w.cwiseInverse();

    FPCAModel model{grid, {}, {}, {}, {}};
    std::vector<Eigen::VectorXd> values;  // per feature, decreasing
    std::vector<Eigen::MatrixXd> vectors;
    // (eigenvalue, feature, rank) for the shared budget.
    std::vector<std::tuple<double, std::size_t, Eigen::Index>> pooled;
    for (std::size_t r = 0; r < data.size(); ++r) {
        const Eigen::VectorXd mean = data[r].rowwise().mean();
        const Eigen::MatrixXd centered = data[r].colwise() - mean;
        // Symmetrized discrete covariance operator W^{1/2} C W^{1/2}.
        const Eigen::MatrixXd scaled = sqrt_w.asDiagonal() * centered;
        const Eigen::MatrixXd op = scaled * scaled.transpose() / static_cast<double>(n - 1);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(op);
        const Eigen::VectorXd lambda = eig.eigenvalues().reverse();
        Eigen::MatrixXd phi = inv_sqrt_w.asDiagonal() * eig.eigenvectors().rowwise().reverse();
        canonical_signs(phi);
        for (Eigen::Index k = 0; k < lambda.size(); ++k) pooled.emplace_back(lambda[k], r, k);
        model.means.push_back(mean);
        values.push_back(lambda);
        vectors.push_back(std::move(phi));
    }
    std::stable_sort(pooled.begin(), pooled.end(),
                     [](const auto& a, const auto& b) { return std::get<0>(a) > std::get<0>(b); });
    model.spectrum.resize(static_cast<Eigen::Index>(pooled.size()));
    for (std::size_t k = 0; k < pooled.size(); ++k) model.spectrum[static_cast<Eigen::Index>(k)] = std::get<0>(pooled[k]);
    if (!(model.spectrum.cwiseMax(0.0).sum() > 0.0)) {
        throw Error(ErrorCode::degenerate_data, "functional data has zero variance");
    }
    const Eigen::Index keep = retained_count(model.spectrum, rule);
    std::vector<Eigen::Index> per_feature(data.size(), 0);
    for (Eigen::Index k = 0; k < keep; ++k) ++per_feature[std::get<1>(pooled[static_cast<std::size_t>(k)])];
    for (std::size_t r = 0; r < data.size(); ++r) {
        model.eigenfunctions.push_back(vectors[r].leftCols(per_feature[r]));
        model.eigenvalues.push_back(values[r].head(per_feature[r]));
    }
    return model;
}

Eigen::MatrixXd fpca_encode(const FPCAModel& model, const Curves& data) {
    check_curves(data, static_cast<Eigen::Index>(model.means.size()), model.grid.size(), -1, "FPCA encode input");
    const Eigen::Index n = curve_samples(data);
    Eigen::MatrixXd scores(n, model.total_components());
    Eigen::Index offset = 0;
    for (std::size_t r = 0; r < data.size(); ++r) {
        const Eigen::MatrixXd& phi = model.eigenfunctions[r];
        const Eigen::MatrixXd centered = data[r].colwise() - model.means[r];
        scores.middleCols(offset, phi.cols()) =
            (centered.transpose() * model.grid.weights().asDiagonal()) * phi;
        offset += phi.cols();
    }
    return scores;
}

Curves fpca_reconstruct(const FPCAModel& model, const Eigen::MatrixXd& scores) {
    if (scores.cols() != model.total_components()) {
        throw Error(ErrorCode::shape_mismatch, "score width " + std::to_string(scores.cols()) + " != K " +
                                                   std::to_string(model.total_components()));
    }
    Curves out;
    Eigen::Index offset = 0;
    for (std::size_t r = 0; r < model.means.size(); ++r) {
        const Eigen::MatrixXd& phi = model.eigenfunctions[r];
        Eigen::MatrixXd block = phi * scores.middleCols(offset, phi.cols()).transpose();
        block.colwise() += model.means[r];
        out.push_back(std::move(block));
        offset += phi.cols();
    }
    return out;
}

// ----------------------------------------------------------------- AE

void AEConfig::validate() const {
    if (widths.size() < 3) throw Error(ErrorCode::inconsistent_shapes, "AE needs at least two layers");
    if (widths.front() != widths.back()) throw Error(ErrorCode::inconsistent_shapes, "AE input and output widths differ");
    if (activations.size() + 1 != widths.size()) {
        throw Error(ErrorCode::inconsistent_shapes, "AE needs one activation per layer");
    }
    for (auto w : widths) {
        if (w < 1) throw Error(ErrorCode::inconsistent_shapes, "AE widths must be >= 1");
    }
    if (latent_index < 1 || latent_index >= static_cast<Eigen::Index>(widths.size()) - 1) {
        throw Error(ErrorCode::latent_index_out_of_range, "AE latent index out of range");
    }
    if (!(lr >= 0.0)) throw Error(ErrorCode::invalid_argument, "lr must be >= 0");
    if (!(momentum >= 0.0 && momentum < 1.0)) throw Error(ErrorCode::invalid_argument, "momentum must be in [0, 1)");
}

AEConfig ae_config_like(const BFAEConfig& config) {
    config.validate();
    AEConfig ae;
    for (std::size_t l = 0; l < config.feature_counts.size(); ++l) {
        ae.widths.push_back(config.feature_counts[l] * config.grid_sizes[l]);
    }
    for (Eigen::Index l = 0; l < config.layer_count(); ++l) ae.activations.push_back(config.activation(l));
    ae.latent_index = config.resolved_latent_index();
    ae.epochs = config.epochs;
    ae.seed = config.seed;
    ae.momentum = config.momentum;
    return ae;
}

AEModel ae_init(const AEConfig& config) {
    config.validate();
    AEModel model;
    model.latent_index = config.latent_index;
    for (std::size_t l = 0; l + 1 < config.widths.size(); ++l) {
        const Eigen::Index in = config.widths[l];
        const Eigen::Index out = config.widths[l + 1];
        const double c = std::sqrt(6.0 / static_cast<double>(in + out));
        Rng rng(derive_seed(config.seed, l));
        DenseLayer layer{Eigen::MatrixXd(out, in), Eigen::VectorXd::Zero(out), config.activations[l]};
        for (Eigen::Index j = 0; j < in; ++j)
            for (Eigen::Index i = 0; i < out; ++i) layer.weights(i, j) = rng.uniform(-c, c);
        model.layers.push_back(std::move(layer));
    }
    return model;
}

namespace {

void check_width(const AEModel& model, const Eigen::MatrixXd& data) {
    if (model.layers.empty() || data.cols() != model.layers.front().weights.cols()) {
        throw Error(ErrorCode::shape_mismatch, "AE input width does not match the model");
    }
}

// Columns are samples.
Eigen::MatrixXd dense_apply(const DenseLayer& layer, const Eigen::MatrixXd& input) {
    Eigen::MatrixXd pre = layer.weights * input;
    pre.colwise() += layer.bias;
    return activate(layer.activation, pre);
}

Eigen::MatrixXd run_layers(const AEModel& model, Eigen::MatrixXd current, std::size_t first, std::size_t last) {
    for (std::size_t l = first; l < last; ++l) current = dense_apply(model.layers[l], current);
    return current;
}

}  // namespace

AEGradients ae_gradient(const AEModel& model, const Eigen::MatrixXd& data) {
    check_width(model, data);
    const Eigen::MatrixXd x = data.transpose();
    std::vector<Eigen::MatrixXd> inputs;
    std::vector<Eigen::MatrixXd> pres;
    Eigen::MatrixXd current = x;
    for (const auto& layer : model.layers) {
        inputs.push_back(current);
        Eigen::MatrixXd pre = layer.weights * current;
        pre.colwise() += layer.bias;
        current = activate(layer.activation, pre);
        pres.push_back(std::move(pre));
    }
    const double count = static_cast<double>(x.size());
    const Eigen::MatrixXd diff = current - x;
    AEGradients result;
    result.loss = diff.squaredNorm() / count;
    result.layers.resize(model.layers.size());
    Eigen::MatrixXd upstream = (2.0 / count) * diff;
    for (std::size_t k = model.layers.size(); k-- > 0;) {
        const DenseLayer& layer = model.layers[k];
        Eigen::MatrixXd delta = upstream;
        if (layer.activation != Activation::linear) {
            delta.array() *= activate_derivative(layer.activation, pres[k]).array();
        }
        result.layers[k].weights = delta * inputs[k].transpose();
        result.layers[k].bias = delta.rowwise().sum();
        result.layers[k].activation = layer.activation;
        if (k > 0) upstream = layer.weights.transpose() * delta;
    }
    return result;
}

double ae_loss(const AEModel& model, const Eigen::MatrixXd& data) {
    check_width(model, data);
    return (ae_reconstruct(model, data) - data).squaredNorm() / static_cast<double>(data.size());
}

std::vector<double> ae_train(AEModel& model, const Eigen::MatrixXd& data, const AEConfig& config) {
    config.validate();
    check_width(model, data);
    std::vector<DenseLayer> velocity;
    if (config.momentum > 0.0) {
        for (const auto& layer : model.layers) {
            velocity.push_back({Eigen::MatrixXd::Zero(layer.weights.rows(), layer.weights.cols()),
                                Eigen::VectorXd::Zero(layer.bias.size()), layer.activation});
        }
    }
    std::vector<double> history;
    history.reserve(static_cast<std::size_t>(config.epochs));
    for (Eigen::Index epoch = 0; epoch < config.epochs; ++epoch) {
        AEGradients g = ae_gradient(model, data);
        if (!std::isfinite(g.loss)) {
            throw Error(ErrorCode::divergence, "AE loss became non-finite at epoch " + std::to_string(epoch));
        }
        history.push_back(g.loss);
        if (config.lr == 0.0) continue;
        for (std::size_t k = 0; k < model.layers.size(); ++k) {
            if (config.momentum > 0.0) {
                velocity[k].weights = config.momentum * velocity[k].weights + g.layers[k].weights;
                velocity[k].bias = config.momentum * velocity[k].bias + g.layers[k].bias;
                model.layers[k].weights -= config.lr * velocity[k].weights;
                model.layers[k].bias -= config.lr * velocity[k].bias;
            } else {
                model.layers[k].weights -= config.lr * g.layers[k].weights;
                model.layers[k].bias -= config.lr * g.layers[k].bias;
            }
        }
    }
    return history;
}

AEModel ae_fit(const Eigen::MatrixXd& data, const AEConfig& config, std::vector<double>* history) {
    AEModel model = ae_init(config);
    auto losses = ae_train(model, data, config);
    if (history != nullptr) *history = std::move(losses);
    return model;
}

Eigen::MatrixXd ae_encode(const AEModel& model, const Eigen::MatrixXd& data) {
    check_width(model, data);
    return run_layers(model, data.transpose(), 0, static_cast<std::size_t>(model.latent_index)).transpose();
}

Eigen::MatrixXd ae_reconstruct(const AEModel& model, const Eigen::MatrixXd& data) {
    check_width(model, data);
    return run_layers(model, data.transpose(), 0, model.layers.size()).transpose();
}

}  // namespace bfae
