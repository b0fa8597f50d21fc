#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "bfae/baselines.hpp"
#include "bfae/dataset.hpp"
#include "bfae/gp.hpp"
#include "bfae/model.hpp"

namespace bfae {

using Json = nlohmann::ordered_json;

/// Complete default configuration for an experiment kind
/// (sim1, sim10, phoneme, adelaide, custom). Every accepted key is present.
Json default_experiment_json(std::string_view kind);

/// Overlays `patch` on the defaults of its "experiment" kind (or
/// `fallback_kind`). Unknown keys and type changes throw invalid-config.
Json resolve_experiment_json(const Json& patch, std::string_view fallback_kind);

/// `a.b.c=value`; the value is parsed as JSON when possible, otherwise taken
/// as a string. The key must already exist and keep its type.
void apply_override(Json& config, std::string_view assignment);

/// Replications 100, N in {100, 1000}, M in {50, 250} for simulations.
void apply_paper_scale(Json& config);

/// FNV-1a 64 of the canonical dump, ignoring output_dir and jobs.
std::string config_hash(const Json& config);

struct BfaeSettings {
    Eigen::Index layers = 2;
    Eigen::Index latent_features = 1;
    /// 0 selects M.
    Eigen::Index latent_points = 0;
    /// 0 selects max(1, M / 5).
    Eigen::Index reduced_latent_points = 0;
    Activation hidden_activation = Activation::tanh;
    double lr = 1e-2;
    Eigen::Index epochs = 2000;
    double momentum = 0.0;
    GradientMetric gradient = GradientMetric::functional;
    InitScheme init = InitScheme::uniform;
    Eigen::Index batch_size = 0;
};

struct ExperimentConfig {
    Json json;
    std::string experiment;
    std::uint64_t seed = 1;
    Eigen::Index replications = 10;
    Eigen::Index jobs = 1;
    std::filesystem::path output_dir;

    std::vector<Eigen::Index> n_samples;
    std::vector<Eigen::Index> n_points;
    Eigen::Index n_features = 1;
    MaternParams matern;
    double noise_sd = 0.1;

    bool synthetic = true;
    std::filesystem::path data_path;
    std::filesystem::path response_path;

    double train_fraction = 0.8;
    bool shuffle = true;
    bool standardize = false;
    std::vector<std::string> methods;

    BfaeSettings bfae;
    double ae_lr = 0.5;
    Eigen::Index ae_epochs = 2000;
    double ae_momentum = 0.0;
    double variance_target = 0.99;

    std::vector<double> ridge_grid;
    Eigen::Index flm_max_iterations = 5000;
    double phoneme_separation = 1.0;

    std::string hash;

    static ExperimentConfig from_json(const Json& resolved);
    /// BFAE architecture for R features on M points; `reduced` selects the
    /// M' = reduced_latent_points variant.
    BFAEConfig bfae_config(Eigen::Index features, Eigen::Index points, bool reduced, std::uint64_t seed) const;
};

struct ReportRow {
    std::string method;
    std::string dataset;
    Eigen::Index n = 0;
    Eigen::Index m = 0;
    Eigen::Index r = 0;
    /// -1 when the value differs across the replications of a summary row.
    Eigen::Index m_latent = 0;
    Eigen::Index r_latent = 0;
    /// Replication number, or "mean" for summary rows.
    std::string replication;
    std::string split;
    std::string metric;
    double value = 0.0;
    std::uint64_t seed = 0;
    std::string config_hash;
};

struct ExperimentReport {
    std::vector<ReportRow> rows;
    bool failed = false;

    void append(const ExperimentReport& other);
    /// Adds one "mean" row per (method, dataset, n, m, r, split, metric).
    void add_summaries(std::uint64_t seed, const std::string& hash);
    void write_csv(const std::filesystem::path& path) const;
    void write_json(const std::filesystem::path& path) const;
};

/// Output of one dimension-reduction method.
struct Reduction {
    Curves train;
    Curves test;
    Eigen::Index r_latent = 0;
    Eigen::Index m_latent = 0;
    /// Retained components for pca / fpca, otherwise 0.
    Eigen::Index components = 0;
};

/// none, pca, fpca, ae, bfae or bfae_mprime, fitted on `train`.
Reduction run_reducer(std::string_view method, const Curves& train, const Curves& test, const Grid& grid,
                      const ExperimentConfig& config, std::uint64_t seed);

enum class Task { classify, regress };

struct PipelineData {
    FunctionalDataset train;
    FunctionalDataset test;
    /// Regression responses aligned with train / test.
    std::optional<FunctionalDataset> response_train;
    std::optional<FunctionalDataset> response_test;
};

/// Fits the reducer on the training split, reconstructs both splits
/// (standardizing first when configured), fits the downstream model on the
/// reconstructed training curves and reports reconstruction RMSE plus
/// downstream train / test error.
ExperimentReport evaluate_pipeline(std::string_view reducer, Task task, const PipelineData& data,
                                   const ExperimentConfig& config, std::uint64_t seed, Eigen::Index replication);

struct CommandResult {
    std::vector<std::filesystem::path> outputs;
    bool ok = true;
    std::string message;
};

CommandResult cmd_simulate(const ExperimentConfig& config);
CommandResult cmd_train(const ExperimentConfig& config);
CommandResult cmd_benchmark(const ExperimentConfig& config);
CommandResult cmd_realdata(const ExperimentConfig& config);

}  // namespace bfae
