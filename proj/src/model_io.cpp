#include "bfae/model_io.hpp"

#include <fstream>

#include "bfae/error.hpp"

namespace bfae {

namespace {

using ojson = nlohmann::ordered_json;

constexpr int model_schema_version = 1;

std::vector<double> to_vector(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

}  // namespace

ojson config_to_json(const BFAEConfig& c) {
    ojson j;
    j["feature_counts"] = c.feature_counts;
    j["grid_sizes"] = c.grid_sizes;
    j["latent_index"] = c.latent_index;
    ojson acts = ojson::array();
    for (auto a : c.activations) acts.push_back(std::string(to_string(a)));
    j["activations"] = acts;
    j["lr"] = c.lr;
    j["epochs"] = c.epochs;
    j["init"] = std::string(to_string(c.init));
    j["seed"] = c.seed;
    j["momentum"] = c.momentum;
    j["gradient"] = std::string(to_string(c.gradient));
    j["batch_size"] = c.batch_size;
    return j;
}

BFAEConfig config_from_json(const nlohmann::json& j) {
    BFAEConfig c;
    try {
        if (j.contains("feature_counts")) c.feature_counts = j.at("feature_counts").get<std::vector<Eigen::Index>>();
        if (j.contains("grid_sizes")) c.grid_sizes = j.at("grid_sizes").get<std::vector<Eigen::Index>>();
        if (j.contains("latent_index")) c.latent_index = j.at("latent_index").get<Eigen::Index>();
        if (j.contains("activations")) {
            for (const auto& a : j.at("activations")) c.activations.push_back(parse_activation(a.get<std::string>()));
        }
        if (j.contains("lr")) c.lr = j.at("lr").get<double>();
        if (j.contains("epochs")) c.epochs = j.at("epochs").get<Eigen::Index>();
        if (j.contains("init")) c.init = parse_init_scheme(j.at("init").get<std::string>());
        if (j.contains("seed")) c.seed = j.at("seed").get<std::uint64_t>();
        if (j.contains("momentum")) c.momentum = j.at("momentum").get<double>();
        if (j.contains("gradient")) c.gradient = parse_gradient_metric(j.at("gradient").get<std::string>());
        if (j.contains("batch_size")) c.batch_size = j.at("batch_size").get<Eigen::Index>();
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::invalid_config, std::string("bad model config: ") + e.what());
    }
    return c;
}

ojson grid_to_json(const Grid& grid) {
    ojson j;
    j["interval"] = {grid.lower(), grid.upper()};
    j["points"] = to_vector(grid.points());
    return j;
}

Grid grid_from_json(const nlohmann::json& j) {
    const auto interval = j.at("interval").get<std::vector<double>>();
    const auto points = j.at("points").get<std::vector<double>>();
    if (interval.size() != 2) throw Error(ErrorCode::invalid_config, "grid interval must have two entries");
    return Grid::restore(interval[0], interval[1],
                         Eigen::Map<const Eigen::VectorXd>(points.data(), static_cast<Eigen::Index>(points.size())));
}

ojson layer_to_json(const ContinuousLayer& layer) {
    layer.validate();
    ojson j;
    j["j_in"] = layer.j_in;
    j["j_out"] = layer.j_out;
    j["activation"] = std::string(to_string(layer.activation));
    j["in_grid"] = grid_to_json(layer.in_grid);
    j["out_grid"] = grid_to_json(layer.out_grid);
    std::vector<double> weights;
    weights.reserve(static_cast<std::size_t>(layer.parameter_count()));
    for (const auto& w : layer.weights) {
        for (Eigen::Index s = 0; s < w.rows(); ++s)
            for (Eigen::Index t = 0; t < w.cols(); ++t) weights.push_back(w(s, t));
    }
    j["weights"] = weights;
    std::vector<double> biases;
    for (const auto& b : layer.biases) biases.insert(biases.end(), b.data(), b.data() + b.size());
    j["biases"] = biases;
    return j;
}

ContinuousLayer layer_from_json(const nlohmann::json& j) {
    try {
        ContinuousLayer layer{grid_from_json(j.at("in_grid")),
                              grid_from_json(j.at("out_grid")),
                              j.at("j_in").get<Eigen::Index>(),
                              j.at("j_out").get<Eigen::Index>(),
                              {},
                              {},
                              parse_activation(j.at("activation").get<std::string>())};
        const auto weights = j.at("weights").get<std::vector<double>>();
        const auto biases = j.at("biases").get<std::vector<double>>();
        const Eigen::Index m_in = layer.in_grid.size();
        const Eigen::Index m_out = layer.out_grid.size();
        if (static_cast<Eigen::Index>(weights.size()) != layer.j_out * layer.j_in * m_out * m_in ||
            static_cast<Eigen::Index>(biases.size()) != layer.j_out * m_out) {
            throw Error(ErrorCode::inconsistent_shapes, "layer payload size does not match its header");
        }
        std::size_t pos = 0;
        for (Eigen::Index k = 0; k < layer.j_out * layer.j_in; ++k) {
            Eigen::MatrixXd w(m_out, m_in);
            for (Eigen::Index s = 0; s < m_out; ++s)
                for (Eigen::Index t = 0; t < m_in; ++t) w(s, t) = weights[pos++];
            layer.weights.push_back(std::move(w));
        }
        pos = 0;
        for (Eigen::Index r = 0; r < layer.j_out; ++r) {
            Eigen::VectorXd b(m_out);
            for (Eigen::Index s = 0; s < m_out; ++s) b[s] = biases[pos++];
            layer.biases.push_back(std::move(b));
        }
        layer.validate();
        return layer;
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::invalid_config, std::string("bad layer record: ") + e.what());
    }
}

void save_model(const BFAEModel& model, const BFAEConfig& config, Eigen::Index epochs_trained,
                const std::filesystem::path& path) {
    ojson j;
    j["format"] = "bfae-model";
    j["schema_version"] = model_schema_version;
    j["config"] = config_to_json(config);
    j["seed"] = config.seed;
    j["epochs_trained"] = epochs_trained;
    j["latent_index"] = model.latent_index;
    ojson layers = ojson::array();
    for (const auto& layer : model.layers) layers.push_back(layer_to_json(layer));
    j["layers"] = std::move(layers);
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorCode::io_failure, "cannot write " + path.string());
    out << j.dump() << '\n';
}

SavedModel load_model(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::missing_file, path.string() + " not found");
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::invalid_config, "cannot parse " + path.string() + ": " + e.what());
    }
    if (j.value("format", "") != "bfae-model" || j.value("schema_version", 0) != model_schema_version) {
        throw Error(ErrorCode::invalid_config, path.string() + " is not a version-1 bfae model file");
    }
    SavedModel saved;
    saved.config = config_from_json(j.at("config"));
    saved.epochs_trained = j.value("epochs_trained", Eigen::Index{0});
    saved.model.latent_index = j.at("latent_index").get<Eigen::Index>();
    for (const auto& layer : j.at("layers")) saved.model.layers.push_back(layer_from_json(layer));
    for (std::size_t l = 1; l < saved.model.layers.size(); ++l) {
        const auto& prev = saved.model.layers[l - 1];
        const auto& cur = saved.model.layers[l];
        if (prev.j_out != cur.j_in || !(prev.out_grid == cur.in_grid)) {
            throw Error(ErrorCode::inconsistent_shapes, "adjacent layers in " + path.string() + " do not chain");
        }
    }
    if (saved.model.latent_index < 1 || saved.model.latent_index >= saved.model.layer_count()) {
        throw Error(ErrorCode::latent_index_out_of_range, "bad latent index in " + path.string());
    }
    return saved;
}

}  // namespace bfae
