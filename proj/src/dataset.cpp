#include "bfae/dataset.hpp"

#include <string>

#include "bfae/error.hpp"

namespace bfae {

Curves make_curves(Eigen::Index features, Eigen::Index points, Eigen::Index samples) {
    return Curves(static_cast<std::size_t>(features), Eigen::MatrixXd::Zero(points, samples));
}

Eigen::Index curve_samples(const Curves& c) { return c.empty() ? 0 : c.front().cols(); }

Eigen::Index curve_points(const Curves& c) { return c.empty() ? 0 : c.front().rows(); }

void check_curves(const Curves& c, Eigen::Index features, Eigen::Index points, Eigen::Index samples,
                  const char* what) {
    auto fail = [&](const std::string& detail) {
        throw Error(ErrorCode::shape_mismatch, std::string(what) + ": " + detail);
    };
    if (c.empty()) fail("no features");
    if (features >= 0 && curve_features(c) != features) {
        fail("expected " + std::to_string(features) + " features, got " + std::to_string(c.size()));
    }
    const Eigen::Index m = points >= 0 ? points : c.front().rows();
    const Eigen::Index n = samples >= 0 ? samples : c.front().cols();
    for (std::size_t r = 0; r < c.size(); ++r) {
        if (c[r].rows() != m || c[r].cols() != n) {
            fail("feature " + std::to_string(r) + " is " + std::to_string(c[r].rows()) + "x" +
                 std::to_string(c[r].cols()) + ", expected " + std::to_string(m) + "x" + std::to_string(n));
        }
    }
}

bool all_finite(const Curves& c) {
    for (const auto& block : c) {
        if (!block.allFinite()) return false;
    }
    return true;
}

Curves select_samples(const Curves& c, std::span<const Eigen::Index> indices) {
    Curves out;
    out.reserve(c.size());
    for (const auto& block : c) {
        Eigen::MatrixXd sel(block.rows(), static_cast<Eigen::Index>(indices.size()));
        for (std::size_t k = 0; k < indices.size(); ++k) {
            if (indices[k] < 0 || indices[k] >= block.cols()) {
                throw Error(ErrorCode::out_of_range, "sample index " + std::to_string(indices[k]));
            }
            sel.col(static_cast<Eigen::Index>(k)) = block.col(indices[k]);
        }
        out.push_back(std::move(sel));
    }
    return out;
}

Eigen::MatrixXd flatten(const Curves& c) {
    check_curves(c, -1, -1, -1, "flatten");
    const Eigen::Index m = curve_points(c);
    Eigen::MatrixXd out(curve_samples(c), curve_features(c) * m);
    for (std::size_t r = 0; r < c.size(); ++r) {
        out.middleCols(static_cast<Eigen::Index>(r) * m, m) = c[r].transpose();
    }
    return out;
}

Curves unflatten(const Eigen::MatrixXd& rows, Eigen::Index features, Eigen::Index points) {
    if (rows.cols() != features * points) {
        throw Error(ErrorCode::shape_mismatch, "flattened width " + std::to_string(rows.cols()) + " != " +
                                                   std::to_string(features) + "*" + std::to_string(points));
    }
    Curves out;
    out.reserve(static_cast<std::size_t>(features));
    for (Eigen::Index r = 0; r < features; ++r) out.emplace_back(rows.middleCols(r * points, points).transpose());
    return out;
}

void FunctionalDataset::validate() const {
    check_curves(values, -1, grid.size(), -1, "dataset");
    if (!all_finite(values)) throw Error(ErrorCode::non_finite, "dataset contains non-finite values");
    if (feature_names.size() != values.size()) {
        throw Error(ErrorCode::shape_mismatch, "feature name count does not match feature count");
    }
    if (!labels.empty() && static_cast<Eigen::Index>(labels.size()) != n_samples()) {
        throw Error(ErrorCode::shape_mismatch, "label count does not match sample count");
    }
}

FunctionalDataset FunctionalDataset::subset(std::span<const Eigen::Index> indices) const {
    FunctionalDataset out{select_samples(values, indices), grid, feature_names, {}};
    if (!labels.empty()) {
        out.labels.reserve(indices.size());
        for (auto i : indices) out.labels.push_back(labels[static_cast<std::size_t>(i)]);
    }
    return out;
}

std::vector<std::string> default_feature_names(Eigen::Index features) {
    std::vector<std::string> names;
    for (Eigen::Index r = 0; r < features; ++r) names.push_back("feature_" + std::to_string(r + 1));
    return names;
}

}  // namespace bfae
