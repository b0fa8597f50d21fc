#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

#include "bfae/dataset.hpp"
#include "bfae/grid.hpp"
#include "bfae/layer.hpp"

namespace bfae {

/// How a layer's discrete gradient is turned into a descent direction.
enum class GradientMetric {
    /// Plain gradient with respect to the stored surface values.
    euclidean,
    /// L2 representer (the Frechet derivative); independent of grid density.
    functional,
};

std::string_view to_string(GradientMetric m);
GradientMetric parse_gradient_metric(std::string_view name);

struct BFAEConfig {
    /// [R, J_1, ..., J_{L-1}, R]
    std::vector<Eigen::Index> feature_counts;
    /// [M, M_1, ..., M_{L-1}, M]
    std::vector<Eigen::Index> grid_sizes;
    /// Layer whose output is the latent code; 0 selects ceil(L / 2).
    Eigen::Index latent_index = 0;
    /// One per layer. Empty means tanh for hidden layers and linear output.
    std::vector<Activation> activations;
    double lr = 1e-2;
    Eigen::Index epochs = 2000;
    InitScheme init = InitScheme::uniform;
    std::uint64_t seed = 0;
    double momentum = 0.0;
    GradientMetric gradient = GradientMetric::functional;
    /// 0 trains on the full batch; otherwise fixed consecutive mini-batches.
    Eigen::Index batch_size = 0;

    Eigen::Index layer_count() const { return static_cast<Eigen::Index>(feature_counts.size()) - 1; }
    Eigen::Index resolved_latent_index() const;
    Activation activation(Eigen::Index layer) const;
    /// Throws inconsistent-shapes or latent-index-out-of-range.
    void validate() const;
};

/// Encoder and decoder of `layers` continuous layers. Two layers give
/// (R, M) -> (R', M') -> (R, M); three insert an (R, M) hidden layer in
/// front of the latent layer; deeper stacks pad both sides with (R, M).
BFAEConfig default_architecture(Eigen::Index features, Eigen::Index points, Eigen::Index latent_features,
                                Eigen::Index latent_points, Eigen::Index layers = 2);

struct BFAEModel {
    std::vector<ContinuousLayer> layers;
    Eigen::Index latent_index = 1;

    Eigen::Index layer_count() const { return static_cast<Eigen::Index>(layers.size()); }
    const Grid& data_grid() const { return layers.front().in_grid; }
    Eigen::Index features() const { return layers.front().j_in; }
    Eigen::Index latent_features() const { return layers[static_cast<std::size_t>(latent_index - 1)].j_out; }
    const Grid& latent_grid() const { return layers[static_cast<std::size_t>(latent_index - 1)].out_grid; }
    Eigen::Index parameter_count() const;
};

/// Layer grids are uniform on the data grid's interval (midpoint grids for
/// one-point layers); the input and output layers use `data_grid` itself.
BFAEModel build(const BFAEConfig& config, const Grid& data_grid);
/// Same, on a uniform data grid over [0, 1].
BFAEModel build(const BFAEConfig& config);

struct ModelForward {
    Curves reconstruction;
    /// One per layer; caches[l].input is the output of layer l (H_(l)).
    std::vector<LayerCache> caches;
};

ModelForward forward(const BFAEModel& model, const Curves& batch);
Curves reconstruct(const BFAEModel& model, const Curves& batch);
/// Output of the latent layer: batch x R' x M'.
Curves encode(const BFAEModel& model, const Curves& batch);
/// Decoder half applied to a latent code.
Curves decode(const BFAEModel& model, const Curves& latent);

/// (1/N) sum_i sum_r integral (X - Xhat)^2 over `grid`.
double reconstruction_loss(const Curves& batch, const Curves& reconstruction, const Grid& grid);
/// d loss / d Xhat = (2/N) q(s) (Xhat - X).
Curves reconstruction_loss_gradient(const Curves& batch, const Curves& reconstruction, const Grid& grid);

struct ModelGradients {
    double loss = 0.0;
    std::vector<LayerGradients> layers;
};

/// Loss and exact gradients of the discretized loss for every layer.
ModelGradients model_gradient(const BFAEModel& model, const Curves& batch);

struct TrainHistory {
    std::vector<double> train_loss;
    std::vector<double> validation_loss;
};

/// Gradient descent on the reconstruction loss. Entry k of the history is
/// the loss of the parameters at the start of epoch k. Throws divergence
/// when the loss stops being finite.
TrainHistory train(BFAEModel& model, const Curves& data, const BFAEConfig& config,
                   const Curves* validation = nullptr);

}  // namespace bfae
