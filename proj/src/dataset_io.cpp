#include "bfae/dataset_io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include <json.hpp>

#include "bfae/error.hpp"
#include "bfae/random.hpp"

namespace bfae {

namespace {

std::vector<std::string> split_fields(const std::string& line) {
    std::vector<std::string> fields;
    std::string::size_type start = 0;
    while (true) {
        const auto comma = line.find(',', start);
        if (comma == std::string::npos) {
            fields.push_back(line.substr(start));
            return fields;
        }
        fields.push_back(line.substr(start, comma - start));
        start = comma + 1;
    }
}

std::string format_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

void check_field_text(const std::string& s, const char* what) {
    if (s.find_first_of(",\n\r") != std::string::npos) {
        throw Error(ErrorCode::invalid_argument, std::string(what) + " '" + s + "' contains a separator");
    }
}

std::string cell_position(std::size_t row, std::size_t col, const std::string& name) {
    return "row " + std::to_string(row) + ", column " + std::to_string(col + 1) + " (" + name + ")";
}

}  // namespace

std::filesystem::path grid_sidecar_path(const std::filesystem::path& csv_path) {
    std::filesystem::path p = csv_path;
    p.replace_extension(".grid.json");
    return p;
}

void save_grid_json(const Grid& grid, const std::filesystem::path& path) {
    nlohmann::ordered_json j;
    j["interval"] = {grid.lower(), grid.upper()};
    j["points"] = std::vector<double>(grid.points().data(), grid.points().data() + grid.size());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorCode::io_failure, "cannot write " + path.string());
    out << j.dump() << '\n';
}

Grid load_grid_json(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::missing_file, "grid sidecar " + path.string() + " not found");
    nlohmann::json j;
    try {
        in >> j;
        const auto interval = j.at("interval").get<std::vector<double>>();
        const auto points = j.at("points").get<std::vector<double>>();
        if (interval.size() != 2) throw Error(ErrorCode::malformed_row, "interval must have two entries");
        const Eigen::VectorXd p =
            Eigen::Map<const Eigen::VectorXd>(points.data(), static_cast<Eigen::Index>(points.size()));
        return Grid::restore(interval[0], interval[1], p);
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::malformed_row, "bad grid sidecar " + path.string() + ": " + e.what());
    }
}

void save_csv(const FunctionalDataset& data, const std::filesystem::path& path) {
    data.validate();
    const Eigen::Index m = data.n_points();
    std::ostringstream os;
    os << "sample_id,feature,label";
    for (Eigen::Index t = 0; t < m; ++t) os << ",t_" << (t + 1);
    os << '\n';
    for (const auto& name : data.feature_names) check_field_text(name, "feature name");
    for (const auto& label : data.labels) check_field_text(label, "label");
    for (Eigen::Index i = 0; i < data.n_samples(); ++i) {
        const std::string label = data.labels.empty() ? "" : data.labels[static_cast<std::size_t>(i)];
        for (std::size_t r = 0; r < data.values.size(); ++r) {
            os << i << ',' << data.feature_names[r] << ',' << label;
            for (Eigen::Index t = 0; t < m; ++t) os << ',' << format_double(data.values[r](t, i));
            os << '\n';
        }
    }
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorCode::io_failure, "cannot write " + path.string());
    out << os.str();
    if (!out) throw Error(ErrorCode::io_failure, "write failed for " + path.string());
    save_grid_json(data.grid, grid_sidecar_path(path));
}

FunctionalDataset load_csv(const std::filesystem::path& path, const CsvSchema& schema) {
    if (!std::filesystem::exists(path)) throw Error(ErrorCode::missing_file, path.string() + " not found");
    return load_csv(path, load_grid_json(grid_sidecar_path(path)), schema);
}

FunctionalDataset load_csv(const std::filesystem::path& path, const Grid& grid, const CsvSchema& schema) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::missing_file, path.string() + " not found");

    std::string line;
    if (!std::getline(in, line)) throw Error(ErrorCode::malformed_row, path.string() + " is empty");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto header = split_fields(line);
    if (header.size() < 4 || header[0] != "sample_id" || header[1] != "feature" || header[2] != "label") {
        throw Error(ErrorCode::malformed_row, "header must start with sample_id,feature,label,t_1");
    }
    const Eigen::Index m = static_cast<Eigen::Index>(header.size()) - 3;
    for (Eigen::Index t = 0; t < m; ++t) {
        if (header[static_cast<std::size_t>(t + 3)] != "t_" + std::to_string(t + 1)) {
            throw Error(ErrorCode::malformed_row, "header column " + std::to_string(t + 4) + " must be t_" +
                                                      std::to_string(t + 1));
        }
    }
    if (m != grid.size()) {
        throw Error(ErrorCode::shape_mismatch, "CSV has " + std::to_string(m) + " timepoints, grid has " +
                                                   std::to_string(grid.size()));
    }
    if (schema.points && *schema.points != m) {
        throw Error(ErrorCode::shape_mismatch, "expected " + std::to_string(*schema.points) + " timepoints, file has " +
                                                   std::to_string(m));
    }

    struct Sample {
        std::string label;
        std::vector<std::string> features;
        std::vector<Eigen::VectorXd> values;
    };
    std::vector<Sample> samples;
    std::map<std::string, std::size_t> sample_index;

    std::size_t row = 1;
    while (std::getline(in, line)) {
        ++row;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) throw Error(ErrorCode::malformed_row, "row " + std::to_string(row) + " is empty");
        const auto fields = split_fields(line);
        if (fields.size() != header.size()) {
            throw Error(ErrorCode::ragged_rows, "row " + std::to_string(row) + " has " + std::to_string(fields.size()) +
                                                    " cells, header has " + std::to_string(header.size()));
        }
        Eigen::VectorXd values(m);
        for (Eigen::Index t = 0; t < m; ++t) {
            const std::size_t col = static_cast<std::size_t>(t) + 3;
            const std::string& cell = fields[col];
            double v = 0.0;
            const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
            if (cell.empty() || ec != std::errc() || ptr != cell.data() + cell.size()) {
                throw Error(ErrorCode::malformed_row,
                            cell_position(row, col, header[col]) + ": '" + cell + "' is not a number");
            }
            if (!std::isfinite(v)) {
                throw Error(ErrorCode::non_finite, cell_position(row, col, header[col]) + ": value is not finite");
            }
            values[t] = v;
        }
        auto [it, inserted] = sample_index.emplace(fields[0], samples.size());
        if (inserted) samples.push_back({fields[2], {}, {}});
        Sample& s = samples[it->second];
        if (s.label != fields[2]) {
            throw Error(ErrorCode::malformed_row, cell_position(row, 2, "label") + ": label differs between rows of sample " +
                                                      fields[0]);
        }
        s.features.push_back(fields[1]);
        s.values.push_back(std::move(values));
    }
    if (samples.empty()) throw Error(ErrorCode::malformed_row, path.string() + " has no data rows");

    const std::vector<std::string>& names = samples.front().features;
    for (const auto& s : samples) {
        if (s.features != names) {
            throw Error(ErrorCode::ragged_rows, "every sample must list the same features in the same order");
        }
    }
    if (schema.features && static_cast<Eigen::Index>(names.size()) != *schema.features) {
        throw Error(ErrorCode::shape_mismatch, "expected " + std::to_string(*schema.features) + " features, file has " +
                                                   std::to_string(names.size()));
    }
    if (!schema.feature_names.empty() && schema.feature_names != names) {
        throw Error(ErrorCode::shape_mismatch, "feature names do not match the expected schema");
    }

    const auto n = static_cast<Eigen::Index>(samples.size());
    FunctionalDataset data{make_curves(static_cast<Eigen::Index>(names.size()), m, n), grid, names, {}};
    bool any_label = false;
    for (const auto& s : samples) any_label = any_label || !s.label.empty();
    if (schema.require_labels && !any_label) throw Error(ErrorCode::malformed_row, "labels are required");
    for (Eigen::Index i = 0; i < n; ++i) {
        const Sample& s = samples[static_cast<std::size_t>(i)];
        if (any_label) {
            if (s.label.empty()) throw Error(ErrorCode::malformed_row, "sample " + std::to_string(i) + " has no label");
            data.labels.push_back(s.label);
        }
        for (std::size_t r = 0; r < names.size(); ++r) data.values[r].col(i) = s.values[r];
    }
    data.validate();
    return data;
}

SplitIndices split_indices(Eigen::Index n, const SplitSpec& spec) {
    if (!(spec.train_fraction > 0.0 && spec.train_fraction < 1.0)) {
        throw Error(ErrorCode::invalid_argument, "train fraction must lie strictly between 0 and 1");
    }
    if (n < 2) throw Error(ErrorCode::invalid_argument, "need at least 2 samples to split");
    auto n_train = static_cast<Eigen::Index>(std::llround(spec.train_fraction * static_cast<double>(n)));
    n_train = std::clamp<Eigen::Index>(n_train, 1, n - 1);
    std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) order[static_cast<std::size_t>(i)] = i;
    if (spec.shuffle) {
        Rng rng(spec.seed);
        rng.shuffle(order.begin(), order.end());
    }
    SplitIndices out;
    out.train.assign(order.begin(), order.begin() + n_train);
    out.test.assign(order.begin() + n_train, order.end());
    std::sort(out.train.begin(), out.train.end());
    std::sort(out.test.begin(), out.test.end());
    return out;
}

std::pair<FunctionalDataset, FunctionalDataset> train_test_split(const FunctionalDataset& data, const SplitSpec& spec) {
    const SplitIndices idx = split_indices(data.n_samples(), spec);
    return {data.subset(idx.train), data.subset(idx.test)};
}

Standardizer Standardizer::fit(const Curves& train) {
    check_curves(train, -1, -1, -1, "standardizer input");
    const Eigen::Index n = curve_samples(train);
    if (n < 2) throw Error(ErrorCode::invalid_argument, "standardizer needs at least 2 samples");
    Standardizer s;
    for (const auto& block : train) {
        Eigen::VectorXd mean = block.rowwise().mean();
        Eigen::VectorXd sd = ((block.colwise() - mean).array().square().rowwise().sum() / static_cast<double>(n - 1)).sqrt();
        for (Eigen::Index t = 0; t < sd.size(); ++t) {
            if (!(sd[t] > sd_floor)) {
                sd[t] = sd_floor;
                ++s.floored_;
            }
        }
        s.means_.push_back(std::move(mean));
        s.sds_.push_back(std::move(sd));
    }
    return s;
}

Curves Standardizer::apply(const Curves& data) const {
    check_curves(data, static_cast<Eigen::Index>(means_.size()), means_.front().size(), -1, "standardize input");
    Curves out;
    for (std::size_t r = 0; r < data.size(); ++r) {
        out.emplace_back(sds_[r].cwiseInverse().asDiagonal() * (data[r].colwise() - means_[r]));
    }
    return out;
}

Curves Standardizer::invert(const Curves& data) const {
    check_curves(data, static_cast<Eigen::Index>(means_.size()), means_.front().size(), -1, "standardize input");
    Curves out;
    for (std::size_t r = 0; r < data.size(); ++r) {
        Eigen::MatrixXd block = sds_[r].asDiagonal() * data[r];
        block.colwise() += means_[r];
        out.push_back(std::move(block));
    }
    return out;
}

}  // namespace bfae
