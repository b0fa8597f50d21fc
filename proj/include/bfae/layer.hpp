#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "bfae/dataset.hpp"
#include "bfae/grid.hpp"

namespace bfae {

enum class Activation { relu, tanh, sigmoid, linear };

std::string_view to_string(Activation a);
Activation parse_activation(std::string_view name);

double activate(Activation a, double x);
/// Derivative at the pre-activation value; relu'(0) is 0.
double activate_derivative(Activation a, double x);
Eigen::MatrixXd activate(Activation a, const Eigen::MatrixXd& pre);
Eigen::MatrixXd activate_derivative(Activation a, const Eigen::MatrixXd& pre);

/// One layer of continuous neurons. Neuron r maps the incoming functions
/// h_1..h_J on in_grid to
///
///   sigma( b_r(s) + sum_j  integral w_rj(s, t) h_j(t) dt )
///
/// on out_grid, with the integral taken by the in_grid quadrature. Surfaces
/// are stored as raw values, w_rj(s_k, t_l) at (k, l).
struct ContinuousLayer {
    Grid in_grid;
    Grid out_grid;
    Eigen::Index j_in = 0;
    Eigen::Index j_out = 0;
    /// j_out * j_in surfaces, index r * j_in + j, each M_out x M_in.
    std::vector<Eigen::MatrixXd> weights;
    /// j_out bias functions, each of length M_out.
    std::vector<Eigen::VectorXd> biases;
    Activation activation = Activation::linear;

    Eigen::MatrixXd& weight(Eigen::Index r, Eigen::Index j) { return weights[static_cast<std::size_t>(r * j_in + j)]; }
    const Eigen::MatrixXd& weight(Eigen::Index r, Eigen::Index j) const {
        return weights[static_cast<std::size_t>(r * j_in + j)];
    }
    Eigen::Index parameter_count() const;

    /// Throws inconsistent-shapes or non-finite.
    void validate() const;
};

/// Same layout as the layer's parameters.
struct LayerGradients {
    std::vector<Eigen::MatrixXd> weights;
    std::vector<Eigen::VectorXd> biases;

    static LayerGradients zeros_like(const ContinuousLayer& layer);
    LayerGradients& operator+=(const LayerGradients& other);
};

struct LayerCache {
    Curves input;
    Curves pre_activation;
};

struct LayerForward {
    Curves output;
    LayerCache cache;
};

struct LayerBackward {
    LayerGradients grads;
    Curves grad_input;
};

LayerForward layer_forward(const ContinuousLayer& layer, const Curves& input);
/// Forward pass without keeping the cache.
Curves layer_apply(const ContinuousLayer& layer, const Curves& input);

/// Exact gradients of the discretized forward map:
///   delta_r   = upstream_r * sigma'(pre_r)
///   dL/db_r   = sum_i delta_r
///   dL/dw_rj  = delta_r (Q_in h_j)^T
///   dL/dh_j   = Q_in sum_r w_rj^T delta_r
/// where Q_in = diag(in_grid weights).
LayerBackward layer_backward(const ContinuousLayer& layer, const LayerCache& cache, const Curves& upstream);

enum class InitScheme {
    /// Uniform on [-c, c], c = sqrt(6 / ((j_in + j_out) (b - a))) / (b - a).
    uniform,
    zeros,
};

std::string_view to_string(InitScheme s);
InitScheme parse_init_scheme(std::string_view name);

/// Biases start at zero; surfaces follow `scheme`. All grids must share one interval.
ContinuousLayer init_layer(const Grid& in_grid, const Grid& out_grid, Eigen::Index j_in, Eigen::Index j_out,
                           Activation activation, InitScheme scheme, std::uint64_t seed);

/// parameter -= (lr / batch_size) * gradient.
void sgd_step(ContinuousLayer& layer, const LayerGradients& grads, double lr, Eigen::Index batch_size);

/// Riesz representer of the gradient in L2: divides surface gradients by
/// q_out(s) q_in(t) and bias gradients by q_out(s). This is the functional
/// (Frechet) gradient the discrete gradient approximates.
LayerGradients functional_gradient(const ContinuousLayer& layer, const LayerGradients& grads);

}  // namespace bfae
