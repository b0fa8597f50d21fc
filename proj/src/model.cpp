#include "bfae/model.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "bfae/error.hpp"
#include "bfae/random.hpp"

namespace bfae {

std::string_view to_string(GradientMetric m) {
    return m == GradientMetric::euclidean ? "euclidean" : "functional";
}

GradientMetric parse_gradient_metric(std::string_view name) {
    if (name == "euclidean") return GradientMetric::euclidean;
    if (name == "functional") return GradientMetric::functional;
    throw Error(ErrorCode::invalid_argument, "unknown gradient metric '" + std::string(name) + "'");
}

Eigen::Index BFAEConfig::resolved_latent_index() const {
    if (latent_index != 0) return latent_index;
    return (layer_count() + 1) / 2;
}

Activation BFAEConfig::activation(Eigen::Index layer) const {
    if (!activations.empty()) return activations[static_cast<std::size_t>(layer)];
    return layer + 1 == layer_count() ? Activation::linear : Activation::tanh;
}

void BFAEConfig::validate() const {
    if (feature_counts.size() < 3) {
        throw Error(ErrorCode::inconsistent_shapes, "need at least two layers (feature_counts of length >= 3)");
    }
    if (grid_sizes.size() != feature_counts.size()) {
        throw Error(ErrorCode::inconsistent_shapes, "feature_counts has length " +
                                                        std::to_string(feature_counts.size()) + " but grid_sizes has " +
                                                        std::to_string(grid_sizes.size()));
    }
    if (feature_counts.front() != feature_counts.back()) {
        throw Error(ErrorCode::inconsistent_shapes, "input and output feature counts must both equal R");
    }
    if (grid_sizes.front() != grid_sizes.back()) {
        throw Error(ErrorCode::inconsistent_shapes, "input and output grid sizes must both equal M");
    }
    for (std::size_t l = 0; l < feature_counts.size(); ++l) {
        if (feature_counts[l] < 1 || grid_sizes[l] < 1) {
            throw Error(ErrorCode::inconsistent_shapes, "neuron and grid counts must be >= 1");
        }
    }
    if (grid_sizes.front() < 2) throw Error(ErrorCode::inconsistent_shapes, "data grid needs at least 2 points");
    if (!activations.empty() && static_cast<Eigen::Index>(activations.size()) != layer_count()) {
        throw Error(ErrorCode::inconsistent_shapes, "need one activation per layer");
    }
    const Eigen::Index latent = resolved_latent_index();
    if (latent < 1 || latent > layer_count() - 1) {
        throw Error(ErrorCode::latent_index_out_of_range,
                    "latent index " + std::to_string(latent) + " not in 1.." + std::to_string(layer_count() - 1));
    }
    if (grid_sizes[static_cast<std::size_t>(latent)] > grid_sizes.front()) {
        throw Error(ErrorCode::inconsistent_shapes, "latent grid cannot be finer than the data grid");
    }
    if (!(lr >= 0.0) || !std::isfinite(lr)) throw Error(ErrorCode::invalid_argument, "lr must be >= 0");
    if (epochs < 0) throw Error(ErrorCode::invalid_argument, "epochs must be >= 0");
    if (!(momentum >= 0.0 && momentum < 1.0)) throw Error(ErrorCode::invalid_argument, "momentum must be in [0, 1)");
    if (batch_size < 0) throw Error(ErrorCode::invalid_argument, "batch_size must be >= 0");
}

BFAEConfig default_architecture(Eigen::Index features, Eigen::Index points, Eigen::Index latent_features,
                                Eigen::Index latent_points, Eigen::Index layers) {
    if (layers < 2) throw Error(ErrorCode::inconsistent_shapes, "an autoencoder needs at least two layers");
    BFAEConfig cfg;
    const Eigen::Index latent = (layers + 1) / 2;
    for (Eigen::Index l = 0; l <= layers; ++l) {
        cfg.feature_counts.push_back(l == latent ? latent_features : features);
        cfg.grid_sizes.push_back(l == latent ? latent_points : points);
    }
    cfg.latent_index = latent;
    return cfg;
}

Eigen::Index BFAEModel::parameter_count() const {
    Eigen::Index n = 0;
    for (const auto& layer : layers) n += layer.parameter_count();
    return n;
}

BFAEModel build(const BFAEConfig& config, const Grid& data_grid) {
    config.validate();
    if (data_grid.size() != config.grid_sizes.front()) {
        throw Error(ErrorCode::inconsistent_shapes, "data grid has " + std::to_string(data_grid.size()) +
                                                        " points, config expects " +
                                                        std::to_string(config.grid_sizes.front()));
    }
    const Eigen::Index n_layers = config.layer_count();
    std::vector<Grid> grids;
    grids.reserve(static_cast<std::size_t>(n_layers + 1));
    for (Eigen::Index l = 0; l <= n_layers; ++l) {
        if (l == 0 || l == n_layers) {
            grids.push_back(data_grid);
        } else {
            grids.push_back(make_layer_grid(data_grid.lower(), data_grid.upper(), config.grid_sizes[static_cast<std::size_t>(l)]));
        }
    }
    BFAEModel model;
    model.latent_index = config.resolved_latent_index();
    for (Eigen::Index l = 0; l < n_layers; ++l) {
        const auto li = static_cast<std::size_t>(l);
        model.layers.push_back(init_layer(grids[li], grids[li + 1], config.feature_counts[li],
                                          config.feature_counts[li + 1], config.activation(l), config.init,
                                          derive_seed(config.seed, static_cast<std::uint64_t>(l))));
    }
    return model;
}

BFAEModel build(const BFAEConfig& config) {
    if (config.grid_sizes.empty()) throw Error(ErrorCode::inconsistent_shapes, "empty grid_sizes");
    return build(config, make_uniform_grid(0.0, 1.0, config.grid_sizes.front()));
}

ModelForward forward(const BFAEModel& model, const Curves& batch) {
    ModelForward result;
    result.caches.reserve(model.layers.size());
    Curves current = batch;
    for (const auto& layer : model.layers) {
        LayerForward step = layer_forward(layer, current);
        result.caches.push_back(std::move(step.cache));
        current = std::move(step.output);
    }
    result.reconstruction = std::move(current);
    return result;
}

Curves reconstruct(const BFAEModel& model, const Curves& batch) {
    Curves current = batch;
    for (const auto& layer : model.layers) current = layer_apply(layer, current);
    return current;
}

Curves encode(const BFAEModel& model, const Curves& batch) {
    Curves current = batch;
    for (Eigen::Index l = 0; l < model.latent_index; ++l) {
        current = layer_apply(model.layers[static_cast<std::size_t>(l)], current);
    }
    return current;
}

Curves decode(const BFAEModel& model, const Curves& latent) {
    Curves current = latent;
    for (Eigen::Index l = model.latent_index; l < model.layer_count(); ++l) {
        current = layer_apply(model.layers[static_cast<std::size_t>(l)], current);
    }
    return current;
}

double reconstruction_loss(const Curves& batch, const Curves& reconstruction, const Grid& grid) {
    check_curves(batch, -1, grid.size(), -1, "loss input");
    check_curves(reconstruction, curve_features(batch), grid.size(), curve_samples(batch), "loss reconstruction");
    const auto n = static_cast<double>(curve_samples(batch));
    double total = 0.0;
    for (std::size_t r = 0; r < batch.size(); ++r) {
        const Eigen::ArrayXXd diff = (batch[r] - reconstruction[r]).array();
        total += (grid.weights().transpose() * diff.square().matrix()).sum();
    }
    return total / n;
}

Curves reconstruction_loss_gradient(const Curves& batch, const Curves& reconstruction, const Grid& grid) {
    check_curves(batch, -1, grid.size(), -1, "loss input");
    check_curves(reconstruction, curve_features(batch), grid.size(), curve_samples(batch), "loss reconstruction");
    const double scale = 2.0 / static_cast<double>(curve_samples(batch));
    Curves grad;
    grad.reserve(batch.size());
    for (std::size_t r = 0; r < batch.size(); ++r) {
        grad.emplace_back(scale * (grid.weights().asDiagonal() * (reconstruction[r] - batch[r])));
    }
    return grad;
}

ModelGradients model_gradient(const BFAEModel& model, const Curves& batch) {
    ModelForward fwd = forward(model, batch);
    ModelGradients result;
    result.loss = reconstruction_loss(batch, fwd.reconstruction, model.data_grid());
    result.layers.resize(model.layers.size());
    Curves upstream = reconstruction_loss_gradient(batch, fwd.reconstruction, model.data_grid());
    for (std::size_t k = model.layers.size(); k-- > 0;) {
        LayerBackward back = layer_backward(model.layers[k], fwd.caches[k], upstream);
        result.layers[k] = std::move(back.grads);
        upstream = std::move(back.grad_input);
    }
    return result;
}

TrainHistory train(BFAEModel& model, const Curves& data, const BFAEConfig& config, const Curves* validation) {
    config.validate();
    check_curves(data, model.features(), model.data_grid().size(), -1, "training data");
    const Eigen::Index n = curve_samples(data);
    if (n < 1) throw Error(ErrorCode::invalid_argument, "training data is empty");
    const Eigen::Index batch = (config.batch_size == 0 || config.batch_size >= n) ? n : config.batch_size;

    std::vector<Curves> batches;
    if (batch == n) {
        batches.push_back(data);
    } else {
        for (Eigen::Index start = 0; start < n; start += batch) {
            std::vector<Eigen::Index> idx;
            for (Eigen::Index i = start; i < std::min(n, start + batch); ++i) idx.push_back(i);
            batches.push_back(select_samples(data, idx));
        }
    }

    std::vector<LayerGradients> velocity;
    if (config.momentum > 0.0) {
        for (const auto& layer : model.layers) velocity.push_back(LayerGradients::zeros_like(layer));
    }

    TrainHistory history;
    history.train_loss.reserve(static_cast<std::size_t>(config.epochs));
    for (Eigen::Index epoch = 0; epoch < config.epochs; ++epoch) {
        double epoch_loss = 0.0;
        if (validation != nullptr) {
            history.validation_loss.push_back(
                reconstruction_loss(*validation, reconstruct(model, *validation), model.data_grid()));
        }
        for (const auto& part : batches) {
            ModelGradients grads;
            try {
                grads = model_gradient(model, part);
            } catch (const Error& e) {
                if (e.code() != ErrorCode::non_finite) throw;
                grads.loss = std::numeric_limits<double>::quiet_NaN();
            }
            if (!std::isfinite(grads.loss)) {
                throw Error(ErrorCode::divergence, "loss became non-finite at epoch " + std::to_string(epoch) +
                                                       "; last finite epoch " + std::to_string(epoch - 1));
            }
            epoch_loss += grads.loss * static_cast<double>(curve_samples(part)) / static_cast<double>(n);
            for (std::size_t k = 0; k < model.layers.size(); ++k) {
                LayerGradients step = config.gradient == GradientMetric::functional
                                          ? functional_gradient(model.layers[k], grads.layers[k])
                                          : std::move(grads.layers[k]);
                if (config.momentum > 0.0) {
                    // v <- momentum v + g
                    for (std::size_t p = 0; p < step.weights.size(); ++p) {
                        velocity[k].weights[p] = config.momentum * velocity[k].weights[p] + step.weights[p];
                    }
                    for (std::size_t p = 0; p < step.biases.size(); ++p) {
                        velocity[k].biases[p] = config.momentum * velocity[k].biases[p] + step.biases[p];
                    }
                    sgd_step(model.layers[k], velocity[k], config.lr, 1);
                } else {
                    sgd_step(model.layers[k], step, config.lr, 1);
                }
            }
        }
        history.train_loss.push_back(epoch_loss);
    }
    return history;
}

}  // namespace bfae
