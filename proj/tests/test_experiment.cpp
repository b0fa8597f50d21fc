#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "bfae/dataset_io.hpp"
#include "bfae/error.hpp"
#include "bfae/experiment.hpp"
#include "bfae/model_io.hpp"

using namespace bfae;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::vector<std::vector<std::string>> read_csv(const fs::path& p) {
    std::vector<std::vector<std::string>> rows;
    std::ifstream in(p);
    std::string line;
    while (std::getline(in, line)) {
        std::vector<std::string> cells;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) cells.push_back(cell);
        if (!line.empty() && line.back() == ',') cells.emplace_back();
        rows.push_back(cells);
    }
    return rows;
}

// Small, fast configuration for harness tests.
ExperimentConfig quick(const std::string& kind, const fs::path& out, std::vector<std::string> sets = {}) {
    Json j = resolve_experiment_json(Json{{"experiment", kind}}, kind);
    j["output_dir"] = out.string();
    for (const auto& s : {"bfae.epochs=40", "ae.epochs=40", "replications=2"}) apply_override(j, s);
    if (kind == "sim1" || kind == "sim10") {
        apply_override(j, "simulation.n_samples=[30]");
        apply_override(j, "simulation.n_points=[15]");
    }
    for (const auto& s : sets) apply_override(j, s);
    return ExperimentConfig::from_json(j);
}

class Harness : public ::testing::Test {
protected:
    void SetUp() override {
        dir_ = fs::temp_directory_path() /
               ("bfae_harness_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
        fs::remove_all(dir_);
    }
    void TearDown() override { fs::remove_all(dir_); }
    fs::path dir_;
};

}  // namespace

TEST(Config, DefaultsPerKind) {
    const auto sim1 = ExperimentConfig::from_json(default_experiment_json("sim1"));
    EXPECT_EQ(sim1.replications, 10);
    EXPECT_EQ(sim1.n_samples, (std::vector<Eigen::Index>{100}));
    EXPECT_EQ(sim1.n_points, (std::vector<Eigen::Index>{50}));
    EXPECT_EQ(sim1.bfae.lr, 1e-2);
    EXPECT_EQ(sim1.bfae.epochs, 2000);
    EXPECT_FALSE(sim1.standardize);
    const auto sim10 = ExperimentConfig::from_json(default_experiment_json("sim10"));
    EXPECT_EQ(sim10.n_features, 10);
    EXPECT_EQ(sim10.bfae.latent_features, 4);
    const auto ph = ExperimentConfig::from_json(default_experiment_json("phoneme"));
    EXPECT_TRUE(ph.standardize);
    EXPECT_EQ(ph.bfae.reduced_latent_points, 30);
    const auto ad = ExperimentConfig::from_json(default_experiment_json("adelaide"));
    EXPECT_EQ(ad.bfae.latent_features, 4);
    EXPECT_EQ(ad.bfae.reduced_latent_points, 12);
    EXPECT_THROW(default_experiment_json("sim3"), Error);
}

TEST(Config, BfaeArchitecture) {
    const auto c = ExperimentConfig::from_json(default_experiment_json("sim10"));
    const BFAEConfig full = c.bfae_config(10, 50, false, 1);
    EXPECT_EQ(full.feature_counts, (std::vector<Eigen::Index>{10, 4, 10}));
    EXPECT_EQ(full.grid_sizes, (std::vector<Eigen::Index>{50, 50, 50}));
    const BFAEConfig reduced = c.bfae_config(10, 50, true, 1);
    EXPECT_EQ(reduced.grid_sizes, (std::vector<Eigen::Index>{50, 10, 50}));
    EXPECT_EQ(reduced.activations, (std::vector<Activation>{Activation::tanh, Activation::linear}));
}

TEST(Config, OverridesAndValidation) {
    Json j = default_experiment_json("sim1");
    apply_override(j, "bfae.lr=0.05");
    apply_override(j, "bfae.hidden_activation=sigmoid");
    apply_override(j, "simulation.n_points=[25,50]");
    apply_override(j, "standardize=true");
    const auto c = ExperimentConfig::from_json(j);
    EXPECT_EQ(c.bfae.lr, 0.05);
    EXPECT_EQ(c.bfae.hidden_activation, Activation::sigmoid);
    EXPECT_EQ(c.n_points, (std::vector<Eigen::Index>{25, 50}));
    EXPECT_TRUE(c.standardize);

    EXPECT_THROW(apply_override(j, "bfae.learning_rate=1"), Error);
    EXPECT_THROW(apply_override(j, "bfae.lr=fast"), Error);
    EXPECT_THROW(apply_override(j, "bfae..lr=1"), Error);
    EXPECT_THROW(apply_override(j, "novalue"), Error);
    EXPECT_THROW(apply_override(j, "experiment=sim10"), Error);
    Json bad = j;
    apply_override(bad, "replications=0");
    EXPECT_THROW(ExperimentConfig::from_json(bad), Error);
    bad = j;
    apply_override(bad, "methods=[\"pca\",\"kpca\"]");
    EXPECT_THROW(ExperimentConfig::from_json(bad), Error);
    bad = j;
    apply_override(bad, "split.train_fraction=1.0");
    EXPECT_THROW(ExperimentConfig::from_json(bad), Error);
}

TEST(Config, ResolveFromFilePatch) {
    const Json patch = Json::parse(R"({"schema_version":1,"experiment":"sim10","bfae":{"epochs":10}})");
    const auto c = ExperimentConfig::from_json(resolve_experiment_json(patch, "sim1"));
    EXPECT_EQ(c.experiment, "sim10");
    EXPECT_EQ(c.bfae.epochs, 10);
    EXPECT_EQ(c.bfae.latent_features, 4);
    EXPECT_THROW(resolve_experiment_json(Json::parse(R"({"schema_version":2})"), "sim1"), Error);
    EXPECT_THROW(resolve_experiment_json(Json::parse(R"({"bogus":1})"), "sim1"), Error);
    EXPECT_THROW(resolve_experiment_json(Json::parse(R"({"bfae":{"epochs":"many"}})"), "sim1"), Error);
}

TEST(Config, PaperScale) {
    Json j = default_experiment_json("sim1");
    apply_paper_scale(j);
    const auto c = ExperimentConfig::from_json(j);
    EXPECT_EQ(c.replications, 100);
    EXPECT_EQ(c.n_samples, (std::vector<Eigen::Index>{100, 1000}));
    EXPECT_EQ(c.n_points, (std::vector<Eigen::Index>{50, 250}));
}

TEST(Config, HashIgnoresOutputAndJobs) {
    Json a = default_experiment_json("sim1");
    Json b = a;
    b["output_dir"] = "elsewhere";
    b["jobs"] = 4;
    EXPECT_EQ(config_hash(a), config_hash(b));
    b["seed"] = 2;
    EXPECT_NE(config_hash(a), config_hash(b));
    EXPECT_EQ(config_hash(a).size(), 16u);
}

TEST(Report, SummaryRowsAreMeans) {
    ExperimentReport r;
    for (int rep = 0; rep < 3; ++rep) {
        r.rows.push_back({"pca", "sim1", 100, 50, 1, 1, 5 + rep, std::to_string(rep), "test", "rmse", 0.1 * (rep + 1), 7, "h"});
        r.rows.push_back({"bfae", "sim1", 100, 50, 1, 50, 1, std::to_string(rep), "test", "rmse", 0.3 + rep, 7, "h"});
    }
    r.add_summaries(1, "h");
    ASSERT_EQ(r.rows.size(), 8u);
    EXPECT_EQ(r.rows[6].method, "pca");
    EXPECT_EQ(r.rows[6].replication, "mean");
    EXPECT_NEAR(r.rows[6].value, 0.2, 1e-15);
    EXPECT_EQ(r.rows[6].r_latent, -1);
    EXPECT_EQ(r.rows[7].m_latent, 50);
    EXPECT_NEAR(r.rows[7].value, 1.3, 1e-15);
}

TEST_F(Harness, SimulateWritesLoadableFiles) {
    const auto c = quick("sim10", dir_);
    const auto res = cmd_simulate(c);
    ASSERT_TRUE(res.ok);
    const fs::path csv = dir_ / "sim10_n30_m15.csv";
    ASSERT_TRUE(fs::exists(csv));
    const auto d = load_csv(csv);
    EXPECT_EQ(d.n_features(), 10);
    EXPECT_EQ(d.n_samples(), 30);
    EXPECT_EQ(read_csv(csv).size(), 301u);
    const std::string first = slurp(csv);
    cmd_simulate(c);
    EXPECT_EQ(slurp(csv), first);
}

TEST_F(Harness, TrainWritesModelAndHistory) {
    const auto c = quick("sim1", dir_);
    const auto res = cmd_train(c);
    ASSERT_TRUE(res.ok) << res.message;
    const auto history = read_csv(dir_ / "history.csv");
    ASSERT_EQ(history.size(), 41u);
    EXPECT_EQ(history[0], (std::vector<std::string>{"epoch", "loss"}));
    EXPECT_LT(std::stod(history.back()[1]), std::stod(history[1][1]));
    const SavedModel m = load_model(dir_ / "model.json");
    EXPECT_EQ(m.epochs_trained, 40);
    EXPECT_EQ(m.config.epochs, 40);
}

TEST_F(Harness, TrainReportsDivergence) {
    const auto c = quick("sim1", dir_, {"bfae.lr=1e9", "bfae.hidden_activation=linear"});
    const auto res = cmd_train(c);
    EXPECT_FALSE(res.ok);
    EXPECT_NE(res.message.find("last finite epoch"), std::string::npos) << res.message;
}

TEST_F(Harness, BenchmarkRowsSummariesAndCurves) {
    const auto c = quick("sim1", dir_);
    const auto res = cmd_benchmark(c);
    ASSERT_TRUE(res.ok) << res.message;
    const auto rows = read_csv(dir_ / "benchmark_report.csv");
    ASSERT_FALSE(rows.empty());
    EXPECT_EQ(rows[0].size(), 13u);
    std::map<std::pair<std::string, std::string>, int> reps, means;
    std::map<std::string, double> sums, mean_values;
    for (std::size_t k = 1; k < rows.size(); ++k) {
        const auto& r = rows[k];
        const std::string key = r[0] + "/" + r[8] + "/" + r[9];
        if (r[7] == "mean") {
            ++means[{r[0], r[9] + r[8]}];
            mean_values[key] = std::stod(r[10]);
        } else {
            ++reps[{r[0], r[9] + r[8]}];
            sums[key] += std::stod(r[10]);
        }
    }
    for (const auto m : {"pca", "ae", "fpca", "bfae", "bfae_mprime"}) {
        EXPECT_EQ((reps[{m, "rmsetest"}]), 2) << m;
        EXPECT_EQ((means[{m, "rmsetest"}]), 1) << m;
    }
    for (const auto& [key, sum] : sums) EXPECT_NEAR(mean_values[key], sum / 2.0, 1e-12) << key;

    const auto curves = read_csv(dir_ / "reconstruction_curves.csv");
    ASSERT_EQ(curves.size(), 16u);
    EXPECT_EQ(curves[0], (std::vector<std::string>{"t", "truth", "pca", "ae", "fpca", "bfae", "bfae_mprime"}));
    const auto table = read_csv(dir_ / "benchmark_table.csv");
    EXPECT_EQ(table.size(), 6u);
}

TEST_F(Harness, BenchmarkDeterministicAcrossJobs) {
    const auto a = quick("sim1", dir_ / "a");
    const auto b = quick("sim1", dir_ / "b", {"jobs=2"});
    ASSERT_TRUE(cmd_benchmark(a).ok);
    ASSERT_TRUE(cmd_benchmark(b).ok);
    EXPECT_EQ(slurp(dir_ / "a" / "benchmark_report.csv"), slurp(dir_ / "b" / "benchmark_report.csv"));
    EXPECT_EQ(slurp(dir_ / "a" / "benchmark_report.json"), slurp(dir_ / "b" / "benchmark_report.json"));
}

TEST_F(Harness, BenchmarkFailureMarker) {
    const auto c = quick("sim1", dir_, {"bfae.lr=1e9", "bfae.hidden_activation=linear"});
    const auto res = cmd_benchmark(c);
    EXPECT_FALSE(res.ok);
    bool marker = false;
    for (const auto& r : read_csv(dir_ / "benchmark_report.csv")) {
        if (r[0] == "bfae" && r[9] == "failed") marker = true;
    }
    EXPECT_TRUE(marker);
    EXPECT_NE(res.message.find("diverge"), std::string::npos) << res.message;
}

TEST_F(Harness, RealDataStandInClassification) {
    const auto c = quick("phoneme", dir_, {"simulation.n_samples=[120]", "simulation.n_points=[30]",
                                           "bfae.reduced_latent_points=6", "replications=1"});
    const auto res = cmd_realdata(c);
    ASSERT_TRUE(res.ok) << res.message;
    int downstream = 0;
    for (const auto& r : read_csv(dir_ / "realdata_report.csv")) {
        if (r[9] == "classification_error" && r[7] == "0") {
            ++downstream;
            const double v = std::stod(r[10]);
            EXPECT_GE(v, 0.0);
            EXPECT_LE(v, 1.0);
        }
    }
    EXPECT_EQ(downstream, 12);
    EXPECT_TRUE(fs::exists(dir_ / "reconstruction_table.csv"));
    EXPECT_TRUE(fs::exists(dir_ / "downstream_test_table.csv"));
}

TEST_F(Harness, RealDataFromSimulatedFiles) {
    // Files written by simulate feed the file-based path.
    const auto gen = quick("adelaide", dir_ / "gen", {"simulation.n_samples=[40]", "simulation.n_points=[12]"});
    ASSERT_TRUE(cmd_simulate(gen).ok);
    const auto from_files =
        quick("adelaide", dir_ / "files",
              {"data.synthetic=false", "data.path=\"" + (dir_ / "gen" / "adelaide_n40_m12.csv").string() + "\"",
               "data.response_path=\"" + (dir_ / "gen" / "adelaide_n40_m12_response.csv").string() + "\"",
               "simulation.n_samples=[40]", "simulation.n_points=[12]", "bfae.reduced_latent_points=3",
               "replications=1", "methods=[\"none\",\"fpca\"]"});
    const auto res = cmd_realdata(from_files);
    ASSERT_TRUE(res.ok) << res.message;
    int rmse_rows = 0;
    for (const auto& r : read_csv(dir_ / "files" / "realdata_report.csv"))
        if (r[9] == "response_rmse" && r[7] == "0") ++rmse_rows;
    EXPECT_EQ(rmse_rows, 4);
}

TEST_F(Harness, RealDataMissingFiles) {
    const auto c = quick("phoneme", dir_, {"data.synthetic=false", "data.path=\"/nonexistent/phoneme.csv\""});
    try {
        cmd_realdata(c);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::missing_file);
        EXPECT_NE(std::string(e.what()).find("data.synthetic=true"), std::string::npos);
    }
}
