#include "bfae/layer.hpp"

#include <cmath>
#include <string>

#include "bfae/error.hpp"
#include "bfae/random.hpp"

namespace bfae {

std::string_view to_string(Activation a) {
    switch (a) {
        case Activation::relu: return "relu";
        case Activation::tanh: return "tanh";
        case Activation::sigmoid: return "sigmoid";
        case Activation::linear: return "linear";
    }
    return "linear";
}

Activation parse_activation(std::string_view name) {
    if (name == "relu") return Activation::relu;
    if (name == "tanh") return Activation::tanh;
    if (name == "sigmoid" || name == "logistic") return Activation::sigmoid;
    if (name == "linear" || name == "identity") return Activation::linear;
    throw Error(ErrorCode::invalid_argument, "unknown activation '" + std::string(name) + "'");
}

double activate(Activation a, double x) {
    switch (a) {
        case Activation::relu: return x > 0.0 ? x : 0.0;
        case Activation::tanh: return std::tanh(x);
        case Activation::sigmoid: return 1.0 / (1.0 + std::exp(-x));
        case Activation::linear: return x;
    }
    return x;
}

double activate_derivative(Activation a, double x) {
    switch (a) {
        case Activation::relu: return x > 0.0 ? 1.0 : 0.0;
        case Activation::tanh: {
            const double t = std::tanh(x);
            return 1.0 - t * t;
        }
        case Activation::sigmoid: {
            const double s = 1.0 / (1.0 + std::exp(-x));
            return s * (1.0 - s);
        }
        case Activation::linear: return 1.0;
    }
    return 1.0;
}

Eigen::MatrixXd activate(Activation a, const Eigen::MatrixXd& pre) {
    if (a == Activation::linear) return pre;
    return pre.unaryExpr([a](double x) { return activate(a, x); });
}

Eigen::MatrixXd activate_derivative(Activation a, const Eigen::MatrixXd& pre) {
    if (a == Activation::linear) return Eigen::MatrixXd::Ones(pre.rows(), pre.cols());
    return pre.unaryExpr([a](double x) { return activate_derivative(a, x); });
}

Eigen::Index ContinuousLayer::parameter_count() const {
    return j_out * j_in * out_grid.size() * in_grid.size() + j_out * out_grid.size();
}

void ContinuousLayer::validate() const {
    if (j_in < 1 || j_out < 1) throw Error(ErrorCode::inconsistent_shapes, "layer neuron counts must be >= 1");
    if (in_grid.lower() != out_grid.lower() || in_grid.upper() != out_grid.upper()) {
        throw Error(ErrorCode::inconsistent_shapes, "layer input and output grids must share one interval");
    }
    if (weights.size() != static_cast<std::size_t>(j_out * j_in)) {
        throw Error(ErrorCode::inconsistent_shapes, "expected " + std::to_string(j_out * j_in) + " weight surfaces");
    }
    if (biases.size() != static_cast<std::size_t>(j_out)) {
        throw Error(ErrorCode::inconsistent_shapes, "expected " + std::to_string(j_out) + " bias functions");
    }
    for (const auto& w : weights) {
        if (w.rows() != out_grid.size() || w.cols() != in_grid.size()) {
            throw Error(ErrorCode::inconsistent_shapes, "weight surface shape does not match the layer grids");
        }
        if (!w.allFinite()) throw Error(ErrorCode::non_finite, "weight surface has non-finite values");
    }
    for (const auto& b : biases) {
        if (b.size() != out_grid.size()) {
            throw Error(ErrorCode::inconsistent_shapes, "bias length does not match the output grid");
        }
        if (!b.allFinite()) throw Error(ErrorCode::non_finite, "bias has non-finite values");
    }
}

LayerGradients LayerGradients::zeros_like(const ContinuousLayer& layer) {
    LayerGradients g;
    g.weights.reserve(layer.weights.size());
    for (const auto& w : layer.weights) g.weights.push_back(Eigen::MatrixXd::Zero(w.rows(), w.cols()));
    for (const auto& b : layer.biases) g.biases.push_back(Eigen::VectorXd::Zero(b.size()));
    return g;
}

LayerGradients& LayerGradients::operator+=(const LayerGradients& other) {
    for (std::size_t k = 0; k < weights.size(); ++k) weights[k] += other.weights[k];
    for (std::size_t k = 0; k < biases.size(); ++k) biases[k] += other.biases[k];
    return *this;
}

namespace {

Curves quadrature_scaled(const Curves& input, const Grid& grid) {
    Curves scaled;
    scaled.reserve(input.size());
    for (const auto& block : input) scaled.emplace_back(grid.weights().asDiagonal() * block);
    return scaled;
}

Curves pre_activation(const ContinuousLayer& layer, const Curves& input) {
    check_curves(input, layer.j_in, layer.in_grid.size(), -1, "layer input");
    if (!all_finite(input)) throw Error(ErrorCode::non_finite, "layer input contains non-finite values");
    const Curves scaled = quadrature_scaled(input, layer.in_grid);
    const Eigen::Index n = curve_samples(input);
    Curves pre;
    pre.reserve(static_cast<std::size_t>(layer.j_out));
    for (Eigen::Index r = 0; r < layer.j_out; ++r) {
        Eigen::MatrixXd acc = layer.biases[static_cast<std::size_t>(r)].replicate(1, n);
        for (Eigen::Index j = 0; j < layer.j_in; ++j) {
            acc.noalias() += layer.weight(r, j) * scaled[static_cast<std::size_t>(j)];
        }
        pre.push_back(std::move(acc));
    }
    return pre;
}

}  // namespace

LayerForward layer_forward(const ContinuousLayer& layer, const Curves& input) {
    LayerForward result;
    result.cache.pre_activation = pre_activation(layer, input);
    result.cache.input = input;
    result.output.reserve(result.cache.pre_activation.size());
    for (const auto& pre : result.cache.pre_activation) result.output.push_back(activate(layer.activation, pre));
    return result;
}

Curves layer_apply(const ContinuousLayer& layer, const Curves& input) {
    Curves out = pre_activation(layer, input);
    if (layer.activation != Activation::linear) {
        for (auto& block : out) block = activate(layer.activation, block);
    }
    return out;
}

LayerBackward layer_backward(const ContinuousLayer& layer, const LayerCache& cache, const Curves& upstream) {
    const Eigen::Index n = curve_samples(cache.input);
    try {
        check_curves(cache.input, layer.j_in, layer.in_grid.size(), -1, "cached input");
        check_curves(cache.pre_activation, layer.j_out, layer.out_grid.size(), n, "cached pre-activation");
    } catch (const Error& e) {
        throw Error(ErrorCode::stale_cache, e.what());
    }
    check_curves(upstream, layer.j_out, layer.out_grid.size(), n, "upstream gradient");

    const Curves scaled = quadrature_scaled(cache.input, layer.in_grid);
    LayerBackward result;
    result.grads.weights.resize(layer.weights.size());
    result.grads.biases.resize(layer.biases.size());
    result.grad_input = make_curves(layer.j_in, layer.in_grid.size(), n);

    for (Eigen::Index r = 0; r < layer.j_out; ++r) {
        const auto ri = static_cast<std::size_t>(r);
        Eigen::MatrixXd delta = upstream[ri];
        if (layer.activation != Activation::linear) {
            delta.array() *= activate_derivative(layer.activation, cache.pre_activation[ri]).array();
        }
        result.grads.biases[ri] = delta.rowwise().sum();
        for (Eigen::Index j = 0; j < layer.j_in; ++j) {
            const auto ji = static_cast<std::size_t>(j);
            result.grads.weights[static_cast<std::size_t>(r * layer.j_in + j)].noalias() =
                delta * scaled[ji].transpose();
            result.grad_input[ji].noalias() += layer.weight(r, j).transpose() * delta;
        }
    }
    for (auto& block : result.grad_input) block = layer.in_grid.weights().asDiagonal() * block;
    return result;
}

std::string_view to_string(InitScheme s) {
    switch (s) {
        case InitScheme::uniform: return "uniform";
        case InitScheme::zeros: return "zeros";
    }
    return "uniform";
}

InitScheme parse_init_scheme(std::string_view name) {
    if (name == "uniform") return InitScheme::uniform;
    if (name == "zeros") return InitScheme::zeros;
    throw Error(ErrorCode::invalid_argument, "unknown init scheme '" + std::string(name) + "'");
}

ContinuousLayer init_layer(const Grid& in_grid, const Grid& out_grid, Eigen::Index j_in, Eigen::Index j_out,
                           Activation activation, InitScheme scheme, std::uint64_t seed) {
    ContinuousLayer layer{in_grid, out_grid, j_in, j_out, {}, {}, activation};
    const double span = in_grid.length();
    const double c = std::sqrt(6.0 / (static_cast<double>(j_in) * span + static_cast<double>(j_out) * span)) / span;
    Rng rng(seed);
    layer.weights.reserve(static_cast<std::size_t>(j_in * j_out));
    for (Eigen::Index k = 0; k < j_in * j_out; ++k) {
        Eigen::MatrixXd w = Eigen::MatrixXd::Zero(out_grid.size(), in_grid.size());
        if (scheme == InitScheme::uniform) {
            // Column-major fill order is part of the reproducibility contract.
            for (Eigen::Index t = 0; t < w.cols(); ++t)
                for (Eigen::Index s = 0; s < w.rows(); ++s) w(s, t) = rng.uniform(-c, c);
        }
        layer.weights.push_back(std::move(w));
    }
    layer.biases.assign(static_cast<std::size_t>(j_out), Eigen::VectorXd::Zero(out_grid.size()));
    layer.validate();
    return layer;
}

void sgd_step(ContinuousLayer& layer, const LayerGradients& grads, double lr, Eigen::Index batch_size) {
    if (grads.weights.size() != layer.weights.size() || grads.biases.size() != layer.biases.size()) {
        throw Error(ErrorCode::shape_mismatch, "gradient count does not match the layer");
    }
    if (!(lr >= 0.0)) throw Error(ErrorCode::invalid_argument, "learning rate must be >= 0");
    if (batch_size < 1) throw Error(ErrorCode::invalid_argument, "batch size must be >= 1");
    const double scale = lr / static_cast<double>(batch_size);
    for (std::size_t k = 0; k < layer.weights.size(); ++k) {
        if (grads.weights[k].rows() != layer.weights[k].rows() || grads.weights[k].cols() != layer.weights[k].cols()) {
            throw Error(ErrorCode::shape_mismatch, "weight gradient shape does not match the layer");
        }
    }
    for (std::size_t k = 0; k < layer.biases.size(); ++k) {
        if (grads.biases[k].size() != layer.biases[k].size()) {
            throw Error(ErrorCode::shape_mismatch, "bias gradient shape does not match the layer");
        }
    }
    if (scale == 0.0) return;
    for (std::size_t k = 0; k < layer.weights.size(); ++k) layer.weights[k] -= scale * grads.weights[k];
    for (std::size_t k = 0; k < layer.biases.size(); ++k) layer.biases[k] -= scale * grads.biases[k];
}

LayerGradients functional_gradient(const ContinuousLayer& layer, const LayerGradients& grads) {
    const Eigen::ArrayXd inv_out = layer.out_grid.weights().array().inverse();
    const Eigen::ArrayXd inv_in = layer.in_grid.weights().array().inverse();
    LayerGradients out;
    out.weights.reserve(grads.weights.size());
    for (const auto& g : grads.weights) {
        out.weights.emplace_back(inv_out.matrix().asDiagonal() * g * inv_in.matrix().asDiagonal());
    }
    for (const auto& g : grads.biases) out.biases.emplace_back((g.array() * inv_out).matrix());
    return out;
}

}  // namespace bfae
