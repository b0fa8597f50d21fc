#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "bfae/dataset.hpp"
#include "bfae/grid.hpp"
#include "bfae/layer.hpp"
#include "bfae/model.hpp"

namespace bfae {

/// How many components to keep: the smallest count whose cumulative
/// explained-variance ratio reaches `variance_target`, unless `fixed_count`
/// is positive.
struct RetentionRule {
    double variance_target = 0.99;
    Eigen::Index fixed_count = 0;
};

/// Count retained from eigenvalues sorted in decreasing order.
Eigen::Index retained_count(const Eigen::VectorXd& eigenvalues, const RetentionRule& rule);

// ---------------------------------------------------------------- PCA

struct PCAModel {
    Eigen::VectorXd mean;
    /// D x K, orthonormal columns.
    Eigen::MatrixXd components;
    /// Retained variances, decreasing.
    Eigen::VectorXd variances;
    /// Explained-variance ratio of every available component, decreasing.
    Eigen::VectorXd explained_ratio;

    Eigen::Index k() const { return components.cols(); }
};

/// PCA of the rows of `data` (N x D) via SVD of the centered matrix.
PCAModel pca_fit(const Eigen::MatrixXd& data, const RetentionRule& rule = {});
/// (x - mean) V, N x K.
Eigen::MatrixXd pca_encode(const PCAModel& model, const Eigen::MatrixXd& data);
/// mean + scores V^T, N x D.
Eigen::MatrixXd pca_reconstruct(const PCAModel& model, const Eigen::MatrixXd& scores);

// --------------------------------------------------------------- FPCA

/// Per-feature functional PCA sharing one variance budget across features.
struct FPCAModel {
    Grid grid;
    std::vector<Eigen::VectorXd> means;
    /// Per feature, M x K_r, orthonormal under the grid inner product.
    std::vector<Eigen::MatrixXd> eigenfunctions;
    /// Per feature, the K_r retained eigenvalues.
    std::vector<Eigen::VectorXd> eigenvalues;
    /// Every eigenvalue of every feature, decreasing.
    Eigen::VectorXd spectrum;

    Eigen::Index total_components() const;
};

FPCAModel fpca_fit(const Curves& data, const Grid& grid, const RetentionRule& rule = {});
/// Scores <x_r - mean_r, phi_rk>, N x K with feature blocks in order.
Eigen::MatrixXd fpca_encode(const FPCAModel& model, const Curves& data);
Curves fpca_reconstruct(const FPCAModel& model, const Eigen::MatrixXd& scores);

// ----------------------------------------------------------------- AE

/// Fully connected autoencoder on flattened curves.
struct DenseLayer {
    Eigen::MatrixXd weights;  // out x in
    Eigen::VectorXd bias;
    Activation activation = Activation::linear;
};

struct AEConfig {
    /// Layer widths, input first; first and last are equal.
    std::vector<Eigen::Index> widths;
    std::vector<Activation> activations;
    Eigen::Index latent_index = 1;
    double lr = 0.5;
    Eigen::Index epochs = 2000;
    std::uint64_t seed = 0;
    double momentum = 0.0;

    void validate() const;
};

/// Same depth and activations as the continuous network; widths J_l * M_l.
AEConfig ae_config_like(const BFAEConfig& config);

struct AEModel {
    std::vector<DenseLayer> layers;
    Eigen::Index latent_index = 1;
};

/// Glorot-uniform weights, zero biases.
AEModel ae_init(const AEConfig& config);

struct AEGradients {
    double loss = 0.0;
    std::vector<DenseLayer> layers;  // gradients in the parameter layout
};

/// Mean squared error over all N x D entries and its exact gradient.
AEGradients ae_gradient(const AEModel& model, const Eigen::MatrixXd& data);
double ae_loss(const AEModel& model, const Eigen::MatrixXd& data);

/// Full-batch gradient descent; returns the per-epoch loss.
std::vector<double> ae_train(AEModel& model, const Eigen::MatrixXd& data, const AEConfig& config);
AEModel ae_fit(const Eigen::MatrixXd& data, const AEConfig& config, std::vector<double>* history = nullptr);
Eigen::MatrixXd ae_encode(const AEModel& model, const Eigen::MatrixXd& data);
Eigen::MatrixXd ae_reconstruct(const AEModel& model, const Eigen::MatrixXd& data);

}  // namespace bfae
