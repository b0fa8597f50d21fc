#pragma once

#include <Eigen/Dense>
#include <span>
#include <string>
#include <vector>

#include "bfae/grid.hpp"

namespace bfae {

/// A batch of multivariate functions sampled on a common grid: one M x N
/// matrix per feature, rows indexing timepoints and columns indexing samples.
/// Element (i, r, m) of the N x R x M array is curves[r](m, i).
using Curves = std::vector<Eigen::MatrixXd>;

Curves make_curves(Eigen::Index features, Eigen::Index points, Eigen::Index samples);
Eigen::Index curve_samples(const Curves& c);
Eigen::Index curve_points(const Curves& c);
inline Eigen::Index curve_features(const Curves& c) { return static_cast<Eigen::Index>(c.size()); }

/// Throws shape-mismatch unless every block is points x samples. Negative
/// arguments are wildcards; a ragged batch always fails.
void check_curves(const Curves& c, Eigen::Index features, Eigen::Index points, Eigen::Index samples,
                  const char* what);
bool all_finite(const Curves& c);

Curves select_samples(const Curves& c, std::span<const Eigen::Index> indices);

/// N x (R*M) design matrix, feature-major within a row.
Eigen::MatrixXd flatten(const Curves& c);
Curves unflatten(const Eigen::MatrixXd& rows, Eigen::Index features, Eigen::Index points);

/// N samples x R features x M timepoints plus metadata.
struct FunctionalDataset {
    Curves values;
    Grid grid;
    std::vector<std::string> feature_names;
    /// Empty when the dataset carries no response; otherwise one per sample.
    std::vector<std::string> labels;

    Eigen::Index n_samples() const { return curve_samples(values); }
    Eigen::Index n_features() const { return curve_features(values); }
    Eigen::Index n_points() const { return grid.size(); }

    /// Throws on inconsistent shapes or non-finite values.
    void validate() const;
    FunctionalDataset subset(std::span<const Eigen::Index> indices) const;
};

/// "feature_1", ..., "feature_R".
std::vector<std::string> default_feature_names(Eigen::Index features);

}  // namespace bfae
