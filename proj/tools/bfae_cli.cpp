// Command-line entry point: simulate, train, benchmark, realdata.
#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "bfae/error.hpp"
#include "bfae/experiment.hpp"

namespace {

struct Options {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::string out;
    std::optional<long> jobs;
    std::vector<std::string> overrides;
    bool paper_scale = false;
};

void add_common(CLI::App* cmd, Options& o) {
    cmd->add_option("--config", o.config_path, "JSON experiment configuration")->check(CLI::ExistingFile);
    cmd->add_option("--seed", o.seed, "master seed");
    cmd->add_option("--out", o.out, "output directory");
    cmd->add_option("--jobs", o.jobs, "parallel replications")->check(CLI::PositiveNumber);
    cmd->add_option("--set", o.overrides, "override a field, e.g. --set bfae.lr=0.01")->allow_extra_args(false);
    cmd->add_flag("--paper-scale", o.paper_scale, "100 replications and the full N, M grid");
}

bfae::ExperimentConfig load_config(const Options& o, const char* default_kind) {
    bfae::Json patch = bfae::Json::object();
    if (!o.config_path.empty()) {
        std::ifstream in(o.config_path);
        patch = bfae::Json::parse(in, nullptr, false);
        if (patch.is_discarded()) {
            throw bfae::Error(bfae::ErrorCode::invalid_config, o.config_path + " is not valid JSON");
        }
    }
    bfae::Json json = bfae::resolve_experiment_json(patch, default_kind);
    if (o.paper_scale) bfae::apply_paper_scale(json);
    if (o.seed) json["seed"] = *o.seed;
    if (!o.out.empty()) json["output_dir"] = o.out;
    if (o.jobs) json["jobs"] = *o.jobs;
    for (const auto& s : o.overrides) bfae::apply_override(json, s);
    return bfae::ExperimentConfig::from_json(json);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Bi-functional autoencoder experiments"};
    app.require_subcommand(1);

    Options simulate_opts, train_opts, benchmark_opts, realdata_opts;
    auto* simulate = app.add_subcommand("simulate", "write simulated datasets as CSV");
    auto* train = app.add_subcommand("train", "train one model and write its history");
    auto* benchmark = app.add_subcommand("benchmark", "compare reconstruction methods over replications");
    auto* realdata = app.add_subcommand("realdata", "reduce, then classify or regress");
    add_common(simulate, simulate_opts);
    add_common(train, train_opts);
    add_common(benchmark, benchmark_opts);
    add_common(realdata, realdata_opts);

    CLI11_PARSE(app, argc, argv);

    try {
        bfae::CommandResult result;
        if (simulate->parsed()) {
            result = bfae::cmd_simulate(load_config(simulate_opts, "sim1"));
        } else if (train->parsed()) {
            result = bfae::cmd_train(load_config(train_opts, "sim1"));
        } else if (benchmark->parsed()) {
            result = bfae::cmd_benchmark(load_config(benchmark_opts, "sim1"));
        } else {
            result = bfae::cmd_realdata(load_config(realdata_opts, "phoneme"));
        }
        std::cerr << result.message;
        for (const auto& p : result.outputs) std::cout << p.string() << '\n';
        return result.ok ? 0 : 1;
    } catch (const std::exception& e) {
        std::cerr << "bfae: " << e.what() << '\n';
        return 2;
    }
}
