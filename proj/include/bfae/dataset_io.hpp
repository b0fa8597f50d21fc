#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "bfae/dataset.hpp"
#include "bfae/grid.hpp"

namespace bfae {

/// Expectations checked by load_csv; unset fields are not checked.
struct CsvSchema {
    std::optional<Eigen::Index> features;
    std::optional<Eigen::Index> points;
    std::vector<std::string> feature_names;
    bool require_labels = false;
};

/// `data.csv` -> `data.grid.json`.
std::filesystem::path grid_sidecar_path(const std::filesystem::path& csv_path);

/// Sidecar format: {"interval":[a,b],"points":[...]}.
void save_grid_json(const Grid& grid, const std::filesystem::path& path);
Grid load_grid_json(const std::filesystem::path& path);

/// Header `sample_id,feature,label,t_1,...,t_M`, one row per (sample,
/// feature), values printed with 17 significant digits, LF line endings.
/// Also writes the grid sidecar.
void save_csv(const FunctionalDataset& data, const std::filesystem::path& path);

/// Reads the CSV and its grid sidecar. Errors name the offending row and
/// column; nothing is imputed.
FunctionalDataset load_csv(const std::filesystem::path& path, const CsvSchema& schema = {});
FunctionalDataset load_csv(const std::filesystem::path& path, const Grid& grid, const CsvSchema& schema = {});

struct SplitSpec {
    double train_fraction = 0.8;
    std::uint64_t seed = 0;
    bool shuffle = true;
};

struct SplitIndices {
    std::vector<Eigen::Index> train;
    std::vector<Eigen::Index> test;
};

/// round(f N) training indices (clamped to 1..N-1), the rest for testing;
/// both sets sorted ascending.
SplitIndices split_indices(Eigen::Index n, const SplitSpec& spec);
std::pair<FunctionalDataset, FunctionalDataset> train_test_split(const FunctionalDataset& data, const SplitSpec& spec);

/// Per-feature, per-timepoint z-scoring fitted on training data.
class Standardizer {
public:
    static constexpr double sd_floor = 1e-12;

    static Standardizer fit(const Curves& train);

    Curves apply(const Curves& data) const;
    Curves invert(const Curves& data) const;

    const std::vector<Eigen::VectorXd>& means() const { return means_; }
    const std::vector<Eigen::VectorXd>& sds() const { return sds_; }
    /// Timepoints whose standard deviation was raised to sd_floor.
    Eigen::Index floored_points() const { return floored_; }

private:
    std::vector<Eigen::VectorXd> means_;
    std::vector<Eigen::VectorXd> sds_;
    Eigen::Index floored_ = 0;
};

}  // namespace bfae
