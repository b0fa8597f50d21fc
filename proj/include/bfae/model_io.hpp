#pragma once

#include <filesystem>

#include <json.hpp>

#include "bfae/model.hpp"

namespace bfae {

nlohmann::ordered_json config_to_json(const BFAEConfig& config);
/// Missing keys keep their defaults.
BFAEConfig config_from_json(const nlohmann::json& j);

nlohmann::ordered_json grid_to_json(const Grid& grid);
Grid grid_from_json(const nlohmann::json& j);

/// {"j_in", "j_out", "activation", "in_grid", "out_grid", "weights", "biases"};
/// weights are the j_out x j_in x M_out x M_in array flattened row-major,
/// biases the j_out x M_out array.
nlohmann::ordered_json layer_to_json(const ContinuousLayer& layer);
ContinuousLayer layer_from_json(const nlohmann::json& j);

struct SavedModel {
    BFAEModel model;
    BFAEConfig config;
    Eigen::Index epochs_trained = 0;
};

/// {"format": "bfae-model", "schema_version": 1, "config", "seed",
///  "epochs_trained", "latent_index", "layers": [...]}
void save_model(const BFAEModel& model, const BFAEConfig& config, Eigen::Index epochs_trained,
                const std::filesystem::path& path);
SavedModel load_model(const std::filesystem::path& path);

}  // namespace bfae
