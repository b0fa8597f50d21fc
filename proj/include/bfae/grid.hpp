#pragma once

#include <Eigen/Dense>

namespace bfae {

/// Sorted timepoints on a compact interval [a, b] with composite trapezoidal
/// quadrature weights. Immutable after construction.
///
/// A single-point grid is allowed for collapsed latent layers: the point sits
/// at the interval midpoint and carries the whole interval length as weight.
class Grid {
public:
    /// Builds a grid from strictly increasing points; the interval is
    /// [points.front(), points.back()].
    static Grid from_points(const Eigen::VectorXd& points);

    /// m equally spaced points; interior weights h, endpoint weights h/2.
    static Grid uniform(double a, double b, Eigen::Index m);

    /// One point at (a + b) / 2 with weight b - a.
    static Grid single_point(double a, double b);

    /// Rebuilds a serialized grid: a midpoint grid for one point, the uniform
    /// grid when the points match it bitwise, otherwise from_points.
    static Grid restore(double a, double b, const Eigen::VectorXd& points);

    Eigen::Index size() const { return points_.size(); }
    double lower() const { return lower_; }
    double upper() const { return upper_; }
    double length() const { return upper_ - lower_; }
    const Eigen::VectorXd& points() const { return points_; }
    const Eigen::VectorXd& weights() const { return weights_; }
    double point(Eigen::Index i) const { return points_[i]; }
    double weight(Eigen::Index i) const { return weights_[i]; }

    /// Same interval and same points (bitwise).
    bool operator==(const Grid& other) const;

private:
    Grid(double lower, double upper, Eigen::VectorXd points, Eigen::VectorXd weights)
        : lower_(lower), upper_(upper), points_(std::move(points)), weights_(std::move(weights)) {}

    double lower_;
    double upper_;
    Eigen::VectorXd points_;
    Eigen::VectorXd weights_;
};

/// m equally spaced points on [a, b] (m >= 2).
Grid make_uniform_grid(double a, double b, Eigen::Index m);

/// Uniform grid for m >= 2, midpoint grid for m == 1. Used for layer grids.
Grid make_layer_grid(double a, double b, Eigen::Index m);

/// Trapezoidal approximation of the integral of `values` over the grid.
double integrate(const Eigen::Ref<const Eigen::VectorXd>& values, const Grid& grid);

/// L2 inner product of two sampled functions.
double inner_product(const Eigen::Ref<const Eigen::VectorXd>& f,
                     const Eigen::Ref<const Eigen::VectorXd>& g, const Grid& grid);

/// Piecewise-linear interpolation of `values` (on `from`) at the points of `to`.
Eigen::VectorXd linear_resample(const Eigen::Ref<const Eigen::VectorXd>& values, const Grid& from,
                                const Grid& to);

}  // namespace bfae
