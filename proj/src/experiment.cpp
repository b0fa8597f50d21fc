#include "bfae/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <thread>

#include "bfae/dataset_io.hpp"
#include "bfae/downstream.hpp"
#include "bfae/error.hpp"
#include "bfae/model_io.hpp"
#include "bfae/random.hpp"
#include "bfae/standins.hpp"

namespace bfae {

namespace fs = std::filesystem;

// ------------------------------------------------------------ configuration

Json default_experiment_json(std::string_view kind) {
    static const std::set<std::string_view> kinds{"sim1", "sim10", "phoneme", "adelaide", "custom"};
    if (!kinds.contains(kind)) throw Error(ErrorCode::invalid_config, "unknown experiment kind '" + std::string(kind) + "'");

    Json j;
    j["schema_version"] = 1;
    j["experiment"] = kind;
    j["seed"] = 1;
    j["replications"] = 10;
    j["jobs"] = 1;
    j["output_dir"] = "out";
    j["simulation"] = {{"n_samples", {100}}, {"n_points", {50}}, {"n_features", 1},
                       {"sigma2", 1.0},      {"rho", 0.5},       {"noise_sd", 0.1}};
    j["data"] = {{"synthetic", true}, {"path", ""}, {"response_path", ""}};
    j["split"] = {{"train_fraction", 0.8}, {"shuffle", true}};
    j["standardize"] = false;
    j["methods"] = {"pca", "ae", "fpca", "bfae", "bfae_mprime"};
    j["bfae"] = {{"layers", 2},
                 {"latent_features", 1},
                 {"latent_points", 0},
                 {"reduced_latent_points", 0},
                 {"hidden_activation", "tanh"},
                 {"lr", 1e-2},
                 {"epochs", 2000},
                 {"momentum", 0.0},
                 {"gradient", "functional"},
                 {"init", "uniform"},
                 {"batch_size", 0}};
    j["ae"] = {{"lr", 0.5}, {"epochs", 2000}, {"momentum", 0.0}};
    j["baselines"] = {{"variance_target", 0.99}};
    j["downstream"] = {{"ridge_grid", default_ridge_grid()}, {"max_iterations", 5000}, {"phoneme_separation", 0.5}};

    if (kind == "sim10") {
        j["replications"] = 5;
        j["simulation"]["n_features"] = 10;
        j["bfae"]["latent_features"] = 4;
    } else if (kind == "phoneme") {
        j["replications"] = 1;
        j["standardize"] = true;
        j["simulation"]["n_samples"] = {800};
        j["simulation"]["n_points"] = {150};
        j["methods"] = {"none", "bfae", "bfae_mprime", "pca", "fpca", "ae"};
        j["bfae"]["reduced_latent_points"] = 30;
        j["bfae"]["lr"] = 0.1;
    } else if (kind == "adelaide") {
        j["replications"] = 1;
        j["standardize"] = true;
        j["simulation"]["n_samples"] = {508};
        j["simulation"]["n_points"] = {48};
        j["simulation"]["n_features"] = 7;
        j["split"]["train_fraction"] = 400.0 / 508.0;
        j["methods"] = {"none", "bfae", "bfae_mprime", "pca", "fpca", "ae"};
        j["bfae"]["latent_features"] = 4;
        j["bfae"]["reduced_latent_points"] = 12;
        j["bfae"]["lr"] = 0.1;
    } else if (kind == "custom") {
        j["replications"] = 1;
        j["data"]["synthetic"] = false;
    }
    return j;
}

namespace {

bool same_kind(const Json& a, const Json& b) {
    if (a.is_number() && b.is_number()) return true;
    return a.type() == b.type();
}

void overlay(Json& base, const Json& patch, const std::string& where) {
    for (auto it = patch.begin(); it != patch.end(); ++it) {
        const std::string key = where.empty() ? it.key() : where + "." + it.key();
        if (!base.contains(it.key())) throw Error(ErrorCode::invalid_config, "unknown key '" + key + "'");
        Json& target = base[it.key()];
        if (!same_kind(target, it.value())) {
            throw Error(ErrorCode::invalid_config, "key '" + key + "' expects " + target.type_name() + ", got " +
                                                       it.value().type_name());
        }
        if (target.is_object()) {
            overlay(target, it.value(), key);
        } else {
            target = it.value();
        }
    }
}

template <typename T>
T get(const Json& j, const char* key) {
    try {
        return j.at(key).get<T>();
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::invalid_config, std::string("key '") + key + "': " + e.what());
    }
}

Eigen::Index get_count(const Json& j, const char* key, Eigen::Index minimum) {
    const auto v = j.at(key);
    if (!v.is_number_integer()) throw Error(ErrorCode::invalid_config, std::string("key '") + key + "' must be an integer");
    const auto n = v.get<std::int64_t>();
    if (n < minimum) {
        throw Error(ErrorCode::invalid_config, std::string("key '") + key + "' must be at least " + std::to_string(minimum));
    }
    return static_cast<Eigen::Index>(n);
}

std::vector<Eigen::Index> get_counts(const Json& j, const char* key, Eigen::Index minimum) {
    const auto& v = j.at(key);
    if (!v.is_array() || v.empty()) throw Error(ErrorCode::invalid_config, std::string("key '") + key + "' must be a non-empty list");
    std::vector<Eigen::Index> out;
    for (const auto& e : v) {
        if (!e.is_number_integer() || e.get<std::int64_t>() < minimum) {
            throw Error(ErrorCode::invalid_config, std::string("key '") + key + "' entries must be integers >= " +
                                                       std::to_string(minimum));
        }
        out.push_back(static_cast<Eigen::Index>(e.get<std::int64_t>()));
    }
    return out;
}

}  // namespace

Json resolve_experiment_json(const Json& patch, std::string_view fallback_kind) {
    if (!patch.is_object()) throw Error(ErrorCode::invalid_config, "configuration must be a JSON object");
    std::string kind(fallback_kind);
    if (patch.contains("experiment")) {
        if (!patch["experiment"].is_string()) throw Error(ErrorCode::invalid_config, "'experiment' must be a string");
        kind = patch["experiment"].get<std::string>();
    }
    if (patch.contains("schema_version") && patch["schema_version"] != 1) {
        throw Error(ErrorCode::invalid_config, "unsupported schema_version " + patch["schema_version"].dump());
    }
    Json resolved = default_experiment_json(kind);
    overlay(resolved, patch, "");
    return resolved;
}

void apply_override(Json& config, std::string_view assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string_view::npos || eq == 0) {
        throw Error(ErrorCode::invalid_config, "override '" + std::string(assignment) + "' is not key=value");
    }
    const std::string path(assignment.substr(0, eq));
    const std::string text(assignment.substr(eq + 1));
    Json value = Json::parse(text, nullptr, false);
    if (value.is_discarded()) value = text;

    std::vector<std::string> keys;
    for (std::size_t begin = 0;;) {
        const auto dot = path.find('.', begin);
        keys.push_back(path.substr(begin, dot == std::string::npos ? std::string::npos : dot - begin));
        if (keys.back().empty()) throw Error(ErrorCode::invalid_config, "override key '" + path + "' has an empty segment");
        if (dot == std::string::npos) break;
        begin = dot + 1;
    }
    Json patch = std::move(value);
    for (auto it = keys.rbegin(); it != keys.rend(); ++it) {
        Json wrapped = Json::object();
        wrapped[*it] = std::move(patch);
        patch = std::move(wrapped);
    }
    if (patch.contains("experiment") && patch["experiment"] != config["experiment"]) {
        throw Error(ErrorCode::invalid_config, "the experiment kind cannot be overridden; use a config file");
    }
    overlay(config, patch, "");
}

void apply_paper_scale(Json& config) {
    config["replications"] = 100;
    const auto kind = config["experiment"].get<std::string>();
    if (kind == "sim1" || kind == "sim10") {
        config["simulation"]["n_samples"] = {100, 1000};
        config["simulation"]["n_points"] = {50, 250};
    }
}

std::string config_hash(const Json& config) {
    Json copy = config;
    copy.erase("output_dir");
    copy.erase("jobs");
    const std::string text = copy.dump();
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (const unsigned char c : text) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016" PRIx64, h);
    return buf;
}

ExperimentConfig ExperimentConfig::from_json(const Json& resolved) {
    ExperimentConfig c;
    c.json = resolved;
    const Json& j = resolved;
    c.experiment = get<std::string>(j, "experiment");
    c.seed = get<std::uint64_t>(j, "seed");
    c.replications = get_count(j, "replications", 1);
    c.jobs = get_count(j, "jobs", 1);
    c.output_dir = get<std::string>(j, "output_dir");

    const Json& sim = j.at("simulation");
    c.n_samples = get_counts(sim, "n_samples", 2);
    c.n_points = get_counts(sim, "n_points", 2);
    c.n_features = get_count(sim, "n_features", 1);
    c.matern.sigma2 = get<double>(sim, "sigma2");
    c.matern.rho = get<double>(sim, "rho");
    c.noise_sd = get<double>(sim, "noise_sd");
    try {
        c.matern.validate();
    } catch (const Error& e) {
        throw Error(ErrorCode::invalid_config, e.what());
    }
    if (!(c.noise_sd >= 0.0)) throw Error(ErrorCode::invalid_config, "simulation.noise_sd must be >= 0");

    const Json& data = j.at("data");
    c.synthetic = get<bool>(data, "synthetic");
    c.data_path = get<std::string>(data, "path");
    c.response_path = get<std::string>(data, "response_path");

    c.train_fraction = get<double>(j.at("split"), "train_fraction");
    if (!(c.train_fraction > 0.0 && c.train_fraction < 1.0)) {
        throw Error(ErrorCode::invalid_config, "split.train_fraction must lie in (0, 1)");
    }
    c.shuffle = get<bool>(j.at("split"), "shuffle");
    c.standardize = get<bool>(j, "standardize");
    c.methods = get<std::vector<std::string>>(j, "methods");
    static const std::set<std::string> known{"none", "pca", "fpca", "ae", "bfae", "bfae_mprime"};
    for (const auto& m : c.methods) {
        if (!known.contains(m)) throw Error(ErrorCode::invalid_config, "unknown method '" + m + "'");
    }

    const Json& b = j.at("bfae");
    c.bfae.layers = get_count(b, "layers", 2);
    c.bfae.latent_features = get_count(b, "latent_features", 1);
    c.bfae.latent_points = get_count(b, "latent_points", 0);
    c.bfae.reduced_latent_points = get_count(b, "reduced_latent_points", 0);
    c.bfae.lr = get<double>(b, "lr");
    c.bfae.epochs = get_count(b, "epochs", 1);
    c.bfae.momentum = get<double>(b, "momentum");
    c.bfae.batch_size = get_count(b, "batch_size", 0);
    try {
        c.bfae.hidden_activation = parse_activation(get<std::string>(b, "hidden_activation"));
        c.bfae.gradient = parse_gradient_metric(get<std::string>(b, "gradient"));
        c.bfae.init = parse_init_scheme(get<std::string>(b, "init"));
    } catch (const Error& e) {
        throw Error(ErrorCode::invalid_config, e.what());
    }
    if (!(c.bfae.lr >= 0.0)) throw Error(ErrorCode::invalid_config, "bfae.lr must be >= 0");

    const Json& ae = j.at("ae");
    c.ae_lr = get<double>(ae, "lr");
    c.ae_epochs = get_count(ae, "epochs", 1);
    c.ae_momentum = get<double>(ae, "momentum");

    c.variance_target = get<double>(j.at("baselines"), "variance_target");
    if (!(c.variance_target > 0.0 && c.variance_target <= 1.0)) {
        throw Error(ErrorCode::invalid_config, "baselines.variance_target must lie in (0, 1]");
    }
    const Json& d = j.at("downstream");
    c.ridge_grid = get<std::vector<double>>(d, "ridge_grid");
    if (c.ridge_grid.empty()) throw Error(ErrorCode::invalid_config, "downstream.ridge_grid is empty");
    c.flm_max_iterations = get_count(d, "max_iterations", 1);
    c.phoneme_separation = get<double>(d, "phoneme_separation");

    c.hash = config_hash(resolved);
    return c;
}

BFAEConfig ExperimentConfig::bfae_config(Eigen::Index features, Eigen::Index points, bool reduced,
                                         std::uint64_t model_seed) const {
    Eigen::Index latent_points = bfae.latent_points > 0 ? bfae.latent_points : points;
    if (reduced) latent_points = bfae.reduced_latent_points > 0 ? bfae.reduced_latent_points : std::max<Eigen::Index>(1, points / 5);
    BFAEConfig cfg = default_architecture(features, points, bfae.latent_features, latent_points, bfae.layers);
    for (Eigen::Index l = 0; l < bfae.layers; ++l) {
        cfg.activations.push_back(l + 1 == bfae.layers ? Activation::linear : bfae.hidden_activation);
    }
    cfg.lr = bfae.lr;
    cfg.epochs = bfae.epochs;
    cfg.momentum = bfae.momentum;
    cfg.gradient = bfae.gradient;
    cfg.init = bfae.init;
    cfg.batch_size = bfae.batch_size;
    cfg.seed = model_seed;
    return cfg;
}

// ------------------------------------------------------------------- report

void ExperimentReport::append(const ExperimentReport& other) {
    rows.insert(rows.end(), other.rows.begin(), other.rows.end());
    failed = failed || other.failed;
}

void ExperimentReport::add_summaries(std::uint64_t seed, const std::string& hash) {
    struct Group {
        ReportRow first;
        double sum = 0.0;
        Eigen::Index count = 0;
    };
    std::vector<Group> groups;
    std::map<std::tuple<std::string, std::string, Eigen::Index, Eigen::Index, Eigen::Index, std::string, std::string>,
             std::size_t>
        index;
    for (const auto& row : rows) {
        if (row.replication == "mean") continue;
        const auto key = std::make_tuple(row.method, row.dataset, row.n, row.m, row.r, row.split, row.metric);
        auto [it, inserted] = index.try_emplace(key, groups.size());
        if (inserted) groups.push_back({row, 0.0, 0});
        Group& g = groups[it->second];
        if (g.first.m_latent != row.m_latent) g.first.m_latent = -1;
        if (g.first.r_latent != row.r_latent) g.first.r_latent = -1;
        g.sum += row.value;
        ++g.count;
    }
    for (auto& g : groups) {
        ReportRow s = g.first;
        s.replication = "mean";
        s.value = g.sum / static_cast<double>(g.count);
        s.seed = seed;
        s.config_hash = hash;
        rows.push_back(std::move(s));
    }
}

namespace {

std::string format_value(double v) {
    if (std::isnan(v)) return "nan";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::ofstream open_output(const fs::path& path) {
    if (path.has_parent_path()) {
        std::error_code ec;
        fs::create_directories(path.parent_path(), ec);
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorCode::io_failure, "cannot write " + path.string());
    return out;
}

}  // namespace

void ExperimentReport::write_csv(const fs::path& path) const {
    auto out = open_output(path);
    out << "method,dataset,n,m,r,m_latent,r_latent,replication,split,metric,value,seed,config_hash\n";
    for (const auto& row : rows) {
        out << row.method << ',' << row.dataset << ',' << row.n << ',' << row.m << ',' << row.r << ',' << row.m_latent
            << ',' << row.r_latent << ',' << row.replication << ',' << row.split << ',' << row.metric << ','
            << format_value(row.value) << ',' << row.seed << ',' << row.config_hash << '\n';
    }
    if (!out) throw Error(ErrorCode::io_failure, "failed writing " + path.string());
}

void ExperimentReport::write_json(const fs::path& path) const {
    Json j;
    j["failed"] = failed;
    j["rows"] = Json::array();
    for (const auto& row : rows) {
        Json r;
        r["method"] = row.method;
        r["dataset"] = row.dataset;
        r["n"] = row.n;
        r["m"] = row.m;
        r["r"] = row.r;
        r["m_latent"] = row.m_latent;
        r["r_latent"] = row.r_latent;
        r["replication"] = row.replication;
        r["split"] = row.split;
        r["metric"] = row.metric;
        r["value"] = std::isfinite(row.value) ? Json(row.value) : Json(nullptr);
        r["seed"] = row.seed;
        r["config_hash"] = row.config_hash;
        j["rows"].push_back(std::move(r));
    }
    auto out = open_output(path);
    out << j.dump(2) << '\n';
    if (!out) throw Error(ErrorCode::io_failure, "failed writing " + path.string());
}

// ----------------------------------------------------------------- reducers

namespace {

std::uint64_t name_stream(std::string_view name) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (const unsigned char c : name) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

}  // namespace

Reduction run_reducer(std::string_view method, const Curves& train, const Curves& test, const Grid& grid,
                      const ExperimentConfig& config, std::uint64_t seed) {
    const Eigen::Index r = curve_features(train);
    const Eigen::Index m = curve_points(train);
    Reduction out;
    if (method == "none") {
        out.train = train;
        out.test = test;
        out.r_latent = r;
        out.m_latent = m;
    } else if (method == "pca") {
        const PCAModel pca = pca_fit(flatten(train), {config.variance_target, 0});
        out.train = unflatten(pca_reconstruct(pca, pca_encode(pca, flatten(train))), r, m);
        out.test = unflatten(pca_reconstruct(pca, pca_encode(pca, flatten(test))), r, m);
        out.components = pca.k();
        out.r_latent = pca.k();
        out.m_latent = 1;
    } else if (method == "fpca") {
        const FPCAModel fpca = fpca_fit(train, grid, {config.variance_target, 0});
        out.train = fpca_reconstruct(fpca, fpca_encode(fpca, train));
        out.test = fpca_reconstruct(fpca, fpca_encode(fpca, test));
        out.components = fpca.total_components();
        out.r_latent = fpca.total_components();
        out.m_latent = 1;
    } else if (method == "ae") {
        const BFAEConfig like = config.bfae_config(r, m, false, seed);
        AEConfig ae = ae_config_like(like);
        ae.lr = config.ae_lr;
        ae.epochs = config.ae_epochs;
        ae.momentum = config.ae_momentum;
        const AEModel model = ae_fit(flatten(train), ae);
        out.train = unflatten(ae_reconstruct(model, flatten(train)), r, m);
        out.test = unflatten(ae_reconstruct(model, flatten(test)), r, m);
        out.r_latent = like.feature_counts[static_cast<std::size_t>(like.resolved_latent_index())];
        out.m_latent = like.grid_sizes[static_cast<std::size_t>(like.resolved_latent_index())];
    } else if (method == "bfae" || method == "bfae_mprime") {
        const BFAEConfig cfg = config.bfae_config(r, m, method == "bfae_mprime", seed);
        BFAEModel model = build(cfg, grid);
        bfae::train(model, train, cfg);
        out.train = reconstruct(model, train);
        out.test = reconstruct(model, test);
        out.r_latent = model.latent_features();
        out.m_latent = model.latent_grid().size();
    } else {
        throw Error(ErrorCode::invalid_config, "unknown method '" + std::string(method) + "'");
    }
    return out;
}


// ------------------------------------------------------------------ helpers

namespace {

struct ExperimentData {
    FunctionalDataset values;
    /// Empty unless the experiment has a functional response.
    std::optional<FunctionalDataset> response;
};

struct Cell {
    Eigen::Index n = 0;
    Eigen::Index m = 0;
};

std::vector<Cell> cells_of(const ExperimentConfig& config) {
    std::vector<Cell> cells;
    for (const auto n : config.n_samples)
        for (const auto m : config.n_points) cells.push_back({n, m});
    return cells;
}

std::uint64_t replication_seed(const ExperimentConfig& config, std::size_t cell, Eigen::Index rep) {
    return derive_seed(derive_seed(config.seed, cell), static_cast<std::uint64_t>(rep));
}

bool uses_files(const ExperimentConfig& config) {
    return config.experiment == "custom" ||
           ((config.experiment == "phoneme" || config.experiment == "adelaide") && !config.synthetic);
}

FunctionalDataset load_required(const fs::path& path, const CsvSchema& schema, const std::string& what) {
    if (path.empty() || !fs::exists(path)) {
        throw Error(ErrorCode::missing_file,
                    what + " not found at '" + path.string() +
                        "'; convert the source data to the documented CSV layout (header "
                        "sample_id,feature,label,t_1,...,t_M plus a .grid.json sidecar) or set data.synthetic=true");
    }
    return load_csv(path, schema);
}

ExperimentData load_data(const ExperimentConfig& config, const Cell& cell, std::uint64_t seed) {
    const std::string& kind = config.experiment;
    if (kind == "sim1" || kind == "sim10") {
        SimConfig sim;
        sim.n_samples = cell.n;
        sim.n_features = config.n_features;
        sim.grid = make_uniform_grid(0.0, 1.0, cell.m);
        sim.matern = config.matern;
        sim.noise_sd = config.noise_sd;
        sim.seed = seed;
        return {sample_gp(sim), std::nullopt};
    }
    if (kind == "phoneme") {
        if (config.synthetic) {
            PhonemeStandIn spec;
            spec.n_samples = cell.n;
            spec.n_points = cell.m;
            spec.separation = config.phoneme_separation;
            spec.seed = seed;
            return {make_phoneme_standin(spec), std::nullopt};
        }
        CsvSchema schema;
        schema.features = 1;
        schema.require_labels = true;
        return {load_required(config.data_path, schema, "phoneme data"), std::nullopt};
    }
    if (kind == "adelaide") {
        if (config.synthetic) {
            AdelaideStandIn spec;
            spec.n_weeks = cell.n;
            spec.n_points = cell.m;
            spec.seed = seed;
            auto pair = make_adelaide_standin(spec);
            return {std::move(pair.temperature), std::move(pair.demand)};
        }
        CsvSchema schema;
        schema.features = 7;
        schema.feature_names = weekday_names();
        ExperimentData d{load_required(config.data_path, schema, "temperature data"),
                         load_required(config.response_path, schema, "demand data")};
        if (d.response->n_samples() != d.values.n_samples()) {
            throw Error(ErrorCode::inconsistent_shapes, "temperature and demand files hold different sample counts");
        }
        return d;
    }
    ExperimentData d{load_required(config.data_path, {}, "dataset"), std::nullopt};
    if (!config.response_path.empty()) {
        d.response = load_required(config.response_path, {}, "response dataset");
        if (d.response->n_samples() != d.values.n_samples()) {
            throw Error(ErrorCode::inconsistent_shapes, "dataset and response hold different sample counts");
        }
    }
    return d;
}

std::string dataset_name(const ExperimentConfig& config) {
    if (config.experiment == "custom") return config.data_path.stem().string();
    return config.experiment;
}

ReportRow make_row(const ExperimentConfig& config, std::string method, const FunctionalDataset& data,
                   Eigen::Index rep, std::string split, std::string metric, double value, std::uint64_t seed) {
    ReportRow row;
    row.method = std::move(method);
    row.dataset = dataset_name(config);
    row.n = data.n_samples();
    row.m = data.n_points();
    row.r = data.n_features();
    row.replication = std::to_string(rep);
    row.split = std::move(split);
    row.metric = std::move(metric);
    row.value = value;
    row.seed = seed;
    row.config_hash = config.hash;
    return row;
}

ReportRow failure_row(const ExperimentConfig& config, std::string method, const FunctionalDataset& data,
                      Eigen::Index rep, std::uint64_t seed) {
    return make_row(config, std::move(method), data, rep, "-", "failed", std::numeric_limits<double>::quiet_NaN(),
                    seed);
}

/// Runs fn(0), ..., fn(count - 1) on up to `jobs` threads. Results are
/// indexed by task, so the output does not depend on scheduling.
template <typename Result, typename Fn>
std::vector<Result> run_tasks(std::size_t count, Eigen::Index jobs, Fn fn) {
    std::vector<Result> results(count);
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < count; i = next++) results[i] = fn(i);
    };
    const auto n_threads = std::min<std::size_t>(static_cast<std::size_t>(std::max<Eigen::Index>(1, jobs)), count);
    if (n_threads <= 1) {
        worker();
        return results;
    }
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < n_threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
    return results;
}

struct TaskResult {
    ExperimentReport report;
    std::vector<std::string> errors;
    Eigen::VectorXd t;
    Eigen::VectorXd truth;
    std::vector<std::pair<std::string, Eigen::VectorXd>> curves;
};

void write_config(const ExperimentConfig& config, CommandResult& result) {
    const fs::path path = config.output_dir / "config.json";
    auto out = open_output(path);
    out << config.json.dump(2) << '\n';
    result.outputs.push_back(path);
}

std::string cell_label(const ReportRow& row) {
    return "N=" + std::to_string(row.n) + " M=" + std::to_string(row.m) + " R=" + std::to_string(row.r);
}

/// Pivot of the summary rows matching (split, metric): one line per method,
/// one column per (N, M, R) cell.
void write_table(const ExperimentReport& report, const std::string& split, const std::string& metric,
                 const fs::path& path) {
    std::vector<std::string> methods;
    std::vector<std::string> cells;
    std::map<std::pair<std::string, std::string>, double> values;
    for (const auto& row : report.rows) {
        if (row.replication != "mean" || row.split != split || row.metric != metric) continue;
        const std::string cell = cell_label(row);
        if (std::find(methods.begin(), methods.end(), row.method) == methods.end()) methods.push_back(row.method);
        if (std::find(cells.begin(), cells.end(), cell) == cells.end()) cells.push_back(cell);
        values[{row.method, cell}] = row.value;
    }
    auto out = open_output(path);
    out << "method";
    for (const auto& c : cells) out << ',' << c;
    out << '\n';
    for (const auto& m : methods) {
        out << m;
        for (const auto& c : cells) {
            const auto it = values.find({m, c});
            out << ',' << (it == values.end() ? std::string() : format_value(it->second));
        }
        out << '\n';
    }
}

void finish_report(ExperimentReport& report, const ExperimentConfig& config, const std::string& stem,
                   CommandResult& result) {
    report.add_summaries(config.seed, config.hash);
    const fs::path csv = config.output_dir / (stem + "_report.csv");
    const fs::path json = config.output_dir / (stem + "_report.json");
    report.write_csv(csv);
    report.write_json(json);
    result.outputs.push_back(csv);
    result.outputs.push_back(json);
}

std::vector<int> encode_labels(const std::vector<std::string>& labels, const std::vector<std::string>& classes) {
    std::vector<int> y;
    y.reserve(labels.size());
    for (const auto& l : labels) {
        const auto it = std::find(classes.begin(), classes.end(), l);
        if (it == classes.end()) throw Error(ErrorCode::invalid_argument, "label '" + l + "' not seen in training");
        y.push_back(static_cast<int>(it - classes.begin()));
    }
    return y;
}

}  // namespace

// ----------------------------------------------------------------- pipeline

ExperimentReport evaluate_pipeline(std::string_view reducer, Task task, const PipelineData& data,
                                   const ExperimentConfig& config, std::uint64_t seed, Eigen::Index replication) {
    const Grid& grid = data.train.grid;
    const std::string method(reducer);
    Curves train = data.train.values;
    Curves test = data.test.values;
    std::optional<Standardizer> z;
    if (config.standardize) {
        z = Standardizer::fit(train);
        train = z->apply(train);
        test = z->apply(test);
    }
    Reduction red = run_reducer(reducer, train, test, grid, config, derive_seed(seed, name_stream(reducer)));
    if (z) {
        red.train = z->invert(red.train);
        red.test = z->invert(red.test);
    }

    ExperimentReport report;
    auto add = [&](std::string split, std::string metric, double value) {
        ReportRow row = make_row(config, method, data.train, replication, std::move(split), std::move(metric), value, seed);
        row.n = data.train.n_samples() + data.test.n_samples();
        row.r_latent = red.r_latent;
        row.m_latent = red.m_latent;
        report.rows.push_back(std::move(row));
    };
    if (reducer != "none") {
        add("train", "rmse", functional_rmse(data.train.values, red.train, grid));
        add("test", "rmse", functional_rmse(data.test.values, red.test, grid));
    }

    // Downstream inputs share one z-scoring fitted on the original training
    // curves, whichever reducer produced them.
    const Standardizer dz = Standardizer::fit(data.train.values);
    const Curves x_train = dz.apply(red.train);
    const Curves x_test = dz.apply(red.test);
    const std::uint64_t downstream_seed = derive_seed(seed, name_stream("downstream"));
    if (task == Task::classify) {
        if (data.train.labels.empty()) throw Error(ErrorCode::invalid_argument, "classification needs labels");
        std::vector<std::string> classes = data.train.labels;
        std::sort(classes.begin(), classes.end());
        classes.erase(std::unique(classes.begin(), classes.end()), classes.end());
        if (classes.size() != 2) {
            throw Error(ErrorCode::single_class, "classification needs exactly two classes in the training split, found " +
                                                     std::to_string(classes.size()));
        }
        const auto y_train = encode_labels(data.train.labels, classes);
        const auto y_test = encode_labels(data.test.labels, classes);
        FLMFitOptions options;
        options.max_iterations = config.flm_max_iterations;
        const FLMClassifier clf =
            flm_classify_fit_selected(x_train, y_train, grid, config.ridge_grid, downstream_seed, options);
        add("train", "classification_error",
            classification_error(y_train, flm_classify_predict(clf, x_train, grid).labels));
        add("test", "classification_error", classification_error(y_test, flm_classify_predict(clf, x_test, grid).labels));
    } else {
        if (!data.response_train || !data.response_test) {
            throw Error(ErrorCode::invalid_argument, "regression needs response curves");
        }
        const FunctionalDataset& y_train = *data.response_train;
        const FunctionalDataset& y_test = *data.response_test;
        const FoFRegression fof =
            fof_fit_selected(x_train, grid, y_train.values, y_train.grid, config.ridge_grid, downstream_seed);
        add("train", "response_rmse", functional_rmse(y_train.values, fof_predict(fof, x_train), y_train.grid));
        add("test", "response_rmse", functional_rmse(y_test.values, fof_predict(fof, x_test), y_test.grid));
    }
    return report;
}

// ----------------------------------------------------------------- commands

CommandResult cmd_simulate(const ExperimentConfig& config) {
    if (uses_files(config)) {
        throw Error(ErrorCode::invalid_config, "simulate needs a synthetic experiment (data.synthetic=true)");
    }
    CommandResult result;
    const auto cells = cells_of(config);
    for (std::size_t c = 0; c < cells.size(); ++c) {
        const std::uint64_t seed = derive_seed(replication_seed(config, c, 0), 0);
        const ExperimentData data = load_data(config, cells[c], seed);
        const std::string stem =
            config.experiment + "_n" + std::to_string(cells[c].n) + "_m" + std::to_string(cells[c].m);
        const fs::path path = config.output_dir / (stem + ".csv");
        save_csv(data.values, path);
        result.outputs.push_back(path);
        result.outputs.push_back(grid_sidecar_path(path));
        if (data.response) {
            const fs::path rpath = config.output_dir / (stem + "_response.csv");
            save_csv(*data.response, rpath);
            result.outputs.push_back(rpath);
            result.outputs.push_back(grid_sidecar_path(rpath));
        }
        result.message += "simulated " + stem + ": N=" + std::to_string(data.values.n_samples()) +
                          " R=" + std::to_string(data.values.n_features()) +
                          " M=" + std::to_string(data.values.n_points()) + " seed=" + std::to_string(seed) + "\n";
    }
    write_config(config, result);
    return result;
}

CommandResult cmd_train(const ExperimentConfig& config) {
    CommandResult result;
    const std::uint64_t rs = replication_seed(config, 0, 0);
    const ExperimentData data = load_data(config, cells_of(config).front(), derive_seed(rs, 0));
    const auto split = split_indices(data.values.n_samples(), {config.train_fraction, derive_seed(rs, 1), config.shuffle});
    const FunctionalDataset train_set = data.values.subset(split.train);
    const FunctionalDataset test_set = data.values.subset(split.test);
    Curves train_values = train_set.values;
    Curves test_values = test_set.values;
    std::optional<Standardizer> z;
    if (config.standardize) {
        z = Standardizer::fit(train_values);
        train_values = z->apply(train_values);
        test_values = z->apply(test_values);
    }

    const BFAEConfig cfg = config.bfae_config(data.values.n_features(), data.values.n_points(), false,
                                              derive_seed(derive_seed(rs, name_stream("bfae")), name_stream("bfae")));
    BFAEModel model = build(cfg, data.values.grid);
    TrainHistory history;
    try {
        history = train(model, train_values, cfg);
    } catch (const Error& e) {
        if (e.code() != ErrorCode::divergence) throw;
        result.ok = false;
        result.message = std::string("training diverged: ") + e.what() + "\n";
        return result;
    }

    const fs::path model_path = config.output_dir / "model.json";
    const fs::path history_path = config.output_dir / "history.csv";
    save_model(model, cfg, cfg.epochs, model_path);
    {
        auto out = open_output(history_path);
        out << "epoch,loss\n";
        for (std::size_t k = 0; k < history.train_loss.size(); ++k) {
            out << k + 1 << ',' << format_value(history.train_loss[k]) << '\n';
        }
    }
    result.outputs.push_back(model_path);
    result.outputs.push_back(history_path);
    if (z) {
        const fs::path zpath = config.output_dir / "standardizer.json";
        Json j;
        j["means"] = Json::array();
        j["sds"] = Json::array();
        for (std::size_t r = 0; r < z->means().size(); ++r) {
            j["means"].push_back(std::vector<double>(z->means()[r].data(), z->means()[r].data() + z->means()[r].size()));
            j["sds"].push_back(std::vector<double>(z->sds()[r].data(), z->sds()[r].data() + z->sds()[r].size()));
        }
        auto out = open_output(zpath);
        out << j.dump(2) << '\n';
        result.outputs.push_back(zpath);
    }
    write_config(config, result);

    Curves test_recon = reconstruct(model, test_values);
    if (z) test_recon = z->invert(test_recon);
    const double final_loss = reconstruction_loss(train_values, reconstruct(model, train_values), model.data_grid());
    result.message = "trained " + std::to_string(cfg.epochs) + " epochs: loss " + format_value(history.train_loss.front()) +
                     " -> " + format_value(final_loss) + ", test rmse " +
                     format_value(functional_rmse(test_set.values, test_recon, test_set.grid)) + "\n";
    return result;
}

CommandResult cmd_benchmark(const ExperimentConfig& config) {
    CommandResult result;
    auto cells = cells_of(config);
    if (uses_files(config)) cells.resize(1);
    std::vector<std::string> methods;
    for (const auto& m : config.methods)
        if (m != "none") methods.push_back(m);

    const std::size_t reps = static_cast<std::size_t>(config.replications);
    auto outcomes = run_tasks<TaskResult>(cells.size() * reps, config.jobs, [&](std::size_t task) {
        const std::size_t c = task / reps;
        const auto rep = static_cast<Eigen::Index>(task % reps);
        const std::uint64_t rs = replication_seed(config, c, rep);
        TaskResult out;
        std::optional<ExperimentData> data;
        try {
            data = load_data(config, cells[c], derive_seed(rs, 0));
        } catch (const std::exception& e) {
            FunctionalDataset shape{make_curves(config.n_features, cells[c].m, cells[c].n),
                                    make_uniform_grid(0.0, 1.0, cells[c].m), {}, {}};
            out.report.rows.push_back(failure_row(config, "data", shape, rep, rs));
            out.report.failed = true;
            out.errors.push_back("replication " + std::to_string(rep) + ": " + e.what());
            return out;
        }
        const FunctionalDataset& ds = data->values;
        const auto split = split_indices(ds.n_samples(), {config.train_fraction, derive_seed(rs, 1), config.shuffle});
        const FunctionalDataset train_set = ds.subset(split.train);
        const FunctionalDataset test_set = ds.subset(split.test);
        Curves train_values = train_set.values;
        Curves test_values = test_set.values;
        std::optional<Standardizer> z;
        if (config.standardize) {
            z = Standardizer::fit(train_values);
            train_values = z->apply(train_values);
            test_values = z->apply(test_values);
        }
        const bool keep_curves = c == 0 && rep == 0;
        if (keep_curves) {
            out.t = ds.grid.points();
            out.truth = test_set.values[0].col(0);
        }
        for (const auto& method : methods) {
            const std::uint64_t seed = derive_seed(rs, name_stream(method));
            try {
                Reduction red = run_reducer(method, train_values, test_values, ds.grid, config, seed);
                if (z) {
                    red.train = z->invert(red.train);
                    red.test = z->invert(red.test);
                }
                auto add = [&](std::string split_name, std::string metric, double value) {
                    ReportRow row = make_row(config, method, ds, rep, std::move(split_name), std::move(metric), value, seed);
                    row.r_latent = red.r_latent;
                    row.m_latent = red.m_latent;
                    out.report.rows.push_back(std::move(row));
                };
                add("train", "rmse", functional_rmse(train_set.values, red.train, ds.grid));
                add("test", "rmse", functional_rmse(test_set.values, red.test, ds.grid));
                if (red.components > 0) add("train", "components", static_cast<double>(red.components));
                if (keep_curves) out.curves.emplace_back(method, red.test[0].col(0));
            } catch (const std::exception& e) {
                out.report.rows.push_back(failure_row(config, method, ds, rep, seed));
                out.report.failed = true;
                out.errors.push_back(method + " replication " + std::to_string(rep) + ": " + e.what());
            }
        }
        return out;
    });

    ExperimentReport report;
    for (const auto& o : outcomes) {
        report.append(o.report);
        for (const auto& e : o.errors) result.message += "error: " + e + "\n";
    }
    finish_report(report, config, "benchmark", result);
    const fs::path table = config.output_dir / "benchmark_table.csv";
    write_table(report, "test", "rmse", table);
    result.outputs.push_back(table);

    const TaskResult& first = outcomes.front();
    if (first.t.size() > 0) {
        const fs::path fig = config.output_dir / "reconstruction_curves.csv";
        auto out = open_output(fig);
        out << "t,truth";
        for (const auto& [name, _] : first.curves) out << ',' << name;
        out << '\n';
        for (Eigen::Index j = 0; j < first.t.size(); ++j) {
            out << format_value(first.t[j]) << ',' << format_value(first.truth[j]);
            for (const auto& [_, curve] : first.curves) out << ',' << format_value(curve[j]);
            out << '\n';
        }
        result.outputs.push_back(fig);
    }
    write_config(config, result);
    result.ok = !report.failed;
    return result;
}

CommandResult cmd_realdata(const ExperimentConfig& config) {
    Task task = Task::classify;
    if (config.experiment == "adelaide") {
        task = Task::regress;
    } else if (config.experiment != "phoneme") {
        if (config.experiment != "custom") {
            throw Error(ErrorCode::invalid_config, "realdata runs the phoneme, adelaide or custom experiments");
        }
        task = config.response_path.empty() ? Task::classify : Task::regress;
    }
    CommandResult result;
    const Cell cell = cells_of(config).front();
    const std::size_t reps = static_cast<std::size_t>(config.replications);
    const std::size_t n_methods = config.methods.size();

    // Data and split are shared by every reducer of a replication.
    std::vector<PipelineData> inputs;
    std::vector<std::uint64_t> seeds(reps);
    for (std::size_t rep = 0; rep < reps; ++rep) {
        seeds[rep] = replication_seed(config, 0, static_cast<Eigen::Index>(rep));
        ExperimentData data = load_data(config, cell, derive_seed(seeds[rep], 0));
        const auto split =
            split_indices(data.values.n_samples(), {config.train_fraction, derive_seed(seeds[rep], 1), config.shuffle});
        PipelineData p{data.values.subset(split.train), data.values.subset(split.test), std::nullopt, std::nullopt};
        if (task == Task::regress) {
            if (!data.response) throw Error(ErrorCode::invalid_config, "regression needs a response dataset");
            p.response_train = data.response->subset(split.train);
            p.response_test = data.response->subset(split.test);
        }
        inputs.push_back(std::move(p));
    }

    auto outcomes = run_tasks<TaskResult>(reps * n_methods, config.jobs, [&](std::size_t t) {
        const std::size_t rep = t / n_methods;
        const std::string& method = config.methods[t % n_methods];
        TaskResult out;
        try {
            out.report = evaluate_pipeline(method, task, inputs[rep], config, seeds[rep], static_cast<Eigen::Index>(rep));
        } catch (const std::exception& e) {
            out.report.rows.push_back(failure_row(config, method, inputs[rep].train, static_cast<Eigen::Index>(rep),
                                                  seeds[rep]));
            out.report.failed = true;
            out.errors.push_back(method + " replication " + std::to_string(rep) + ": " + e.what());
        }
        return out;
    });

    ExperimentReport report;
    for (const auto& o : outcomes) {
        report.append(o.report);
        for (const auto& e : o.errors) result.message += "error: " + e + "\n";
    }
    finish_report(report, config, "realdata", result);
    const std::string metric = task == Task::classify ? "classification_error" : "response_rmse";
    const std::vector<std::pair<std::string, std::pair<std::string, std::string>>> tables{
        {"reconstruction_table.csv", {"test", "rmse"}},
        {"downstream_train_table.csv", {"train", metric}},
        {"downstream_test_table.csv", {"test", metric}}};
    for (const auto& [file, key] : tables) {
        const fs::path path = config.output_dir / file;
        write_table(report, key.first, key.second, path);
        result.outputs.push_back(path);
    }
    write_config(config, result);
    result.message += std::string("standardize=") + (config.standardize ? "true" : "false") + "\n";
    result.ok = !report.failed;
    return result;
}

}  // namespace bfae
