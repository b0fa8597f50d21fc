#include "bfae/grid.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "bfae/error.hpp"

namespace bfae {

namespace {

Eigen::VectorXd trapezoid_weights(const Eigen::VectorXd& points) {
    const Eigen::Index m = points.size();
    Eigen::VectorXd w = Eigen::VectorXd::Zero(m);
    for (Eigen::Index j = 0; j + 1 < m; ++j) {
        const double h = points[j + 1] - points[j];
        w[j] += 0.5 * h;
        w[j + 1] += 0.5 * h;
    }
    return w;
}

void check_length(Eigen::Index got, const Grid& grid, const char* what) {
    if (got != grid.size()) {
        throw Error(ErrorCode::length_mismatch, std::string(what) + " has " + std::to_string(got) +
                                                    " values, grid has " + std::to_string(grid.size()));
    }
}

}  // namespace

Grid Grid::from_points(const Eigen::VectorXd& points) {
    if (points.size() < 2) {
        throw Error(ErrorCode::too_few_points, "a grid needs at least 2 points");
    }
    for (Eigen::Index j = 0; j < points.size(); ++j) {
        if (!std::isfinite(points[j])) throw Error(ErrorCode::non_finite, "grid point is not finite");
        if (j > 0 && !(points[j] > points[j - 1])) {
            throw Error(ErrorCode::invalid_interval, "grid points must be strictly increasing");
        }
    }
    return Grid(points[0], points[points.size() - 1], points, trapezoid_weights(points));
}

Grid Grid::single_point(double a, double b) {
    if (!(b > a)) throw Error(ErrorCode::invalid_interval, "interval upper bound must exceed lower bound");
    Eigen::VectorXd p(1);
    p[0] = 0.5 * (a + b);
    Eigen::VectorXd w(1);
    w[0] = b - a;
    return Grid(a, b, std::move(p), std::move(w));
}

Grid Grid::restore(double a, double b, const Eigen::VectorXd& points) {
    if (points.size() == 1) {
        Grid g = single_point(a, b);
        if (g.points_[0] != points[0]) throw Error(ErrorCode::invalid_interval, "single grid point must be the midpoint");
        return g;
    }
    if (points.size() >= 2 && b > a) {
        Grid g = uniform(a, b, points.size());
        if (g.points_ == points) return g;
    }
    Grid g = from_points(points);
    if (g.lower_ != a || g.upper_ != b) throw Error(ErrorCode::invalid_interval, "grid points must start at a and end at b");
    return g;
}

bool Grid::operator==(const Grid& other) const {
    return lower_ == other.lower_ && upper_ == other.upper_ && points_.size() == other.points_.size() &&
           points_ == other.points_;
}

Grid Grid::uniform(double a, double b, Eigen::Index m) {
    if (!(b > a)) throw Error(ErrorCode::invalid_interval, "interval upper bound must exceed lower bound");
    if (m < 2) throw Error(ErrorCode::too_few_points, "a uniform grid needs at least 2 points");
    Eigen::VectorXd p(m);
    const double h = (b - a) / static_cast<double>(m - 1);
    for (Eigen::Index j = 0; j < m; ++j) p[j] = a + h * static_cast<double>(j);
    p[m - 1] = b;
    Eigen::VectorXd w = Eigen::VectorXd::Constant(m, h);
    w[0] = 0.5 * h;
    w[m - 1] = 0.5 * h;
    return Grid(a, b, std::move(p), std::move(w));
}

Grid make_uniform_grid(double a, double b, Eigen::Index m) { return Grid::uniform(a, b, m); }

Grid make_layer_grid(double a, double b, Eigen::Index m) {
    if (m == 1) return Grid::single_point(a, b);
    return make_uniform_grid(a, b, m);
}

double integrate(const Eigen::Ref<const Eigen::VectorXd>& values, const Grid& grid) {
    check_length(values.size(), grid, "integrand");
    return grid.weights().dot(values);
}

double inner_product(const Eigen::Ref<const Eigen::VectorXd>& f, const Eigen::Ref<const Eigen::VectorXd>& g,
                     const Grid& grid) {
    check_length(f.size(), grid, "first function");
    check_length(g.size(), grid, "second function");
    return (grid.weights().array() * f.array() * g.array()).sum();
}

Eigen::VectorXd linear_resample(const Eigen::Ref<const Eigen::VectorXd>& values, const Grid& from,
                                const Grid& to) {
    check_length(values.size(), from, "source values");
    const Eigen::VectorXd& x = from.points();
    const Eigen::Index m = x.size();
    Eigen::VectorXd out(to.size());
    for (Eigen::Index k = 0; k < to.size(); ++k) {
        const double t = to.point(k);
        if (t < x[0] || t > x[m - 1]) {
            throw Error(ErrorCode::out_of_range, "target point " + std::to_string(t) + " lies outside [" +
                                                     std::to_string(x[0]) + ", " + std::to_string(x[m - 1]) + "]");
        }
        if (m == 1) {
            out[k] = values[0];
            continue;
        }
        const auto it = std::upper_bound(x.data(), x.data() + m, t);
        Eigen::Index hi = std::min<Eigen::Index>(it - x.data(), m - 1);
        const Eigen::Index lo = hi - 1;
        const double span = x[hi] - x[lo];
        const double frac = (t - x[lo]) / span;
        out[k] = values[lo] + frac * (values[hi] - values[lo]);
    }
    return out;
}

}  // namespace bfae
