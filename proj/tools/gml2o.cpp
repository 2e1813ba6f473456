#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "gml2o/checks.hpp"
#include "gml2o/errors.hpp"
#include "gml2o/harness.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

enum Exit { ok = 0, config_error = 1, runtime_error = 2, check_failure = 3 };

struct Common {
    std::string config;
    std::string out;
    std::vector<std::uint64_t> seeds;
    std::size_t threads = 1;
};

json load_config(const Common& c) {
    if (c.config.empty()) throw gml2o::ConfigError({"--config: required"});
    json j = gml2o::read_json_file(c.config);
    if (!j.is_object()) throw gml2o::ConfigError({"config: top level must be an object"});
    // overrides are absolute or relative to the working directory
    if (!c.out.empty()) j["output"] = fs::absolute(c.out).string();
    return j;
}

std::string config_dir(const std::string& path) {
    return fs::absolute(path).parent_path().string();
}

int cmd_run(const Common& c) {
    json j = load_config(c);
    if (!c.seeds.empty()) j["seeds"] = c.seeds;
    const auto config = gml2o::RunConfig::from_json(j, gml2o::ProblemRegistry::with_builtins(), config_dir(c.config));
    const auto summary = gml2o::run_experiment(config, c.threads);
    std::printf("%zu runs written to %s\n", summary.runs, summary.output.c_str());
    return ok;
}

int cmd_train(const Common& c) {
    json j = load_config(c);
    if (c.seeds.size() > 1) throw gml2o::ConfigError({"--seeds: train-ml2o takes a single seed"});
    if (c.seeds.size() == 1) j["seed"] = c.seeds[0];
    const auto config =
        gml2o::TrainConfig::from_json(j, gml2o::ProblemRegistry::with_builtins(), config_dir(c.config));
    const auto summary = gml2o::train_ml2o_cmd(config);
    std::printf("%zu epochs, %zu trace rows; checkpoint %s\n", summary.epochs_run, summary.trace_rows,
                summary.checkpoint.c_str());
    return ok;
}

int cmd_compare(const std::vector<std::string>& dirs, const std::string& metric, const std::string& out) {
    const auto rows = gml2o::compare_cmd(dirs, gml2o::parse_compare_metric(metric), out);
    std::printf("run,optimizer,%s_mean,%s_std,count\n", metric.c_str(), metric.c_str());
    for (const auto& r : rows) {
        std::printf("%s,%s,%s,%s,%zu\n", r.run.c_str(), r.optimizer.c_str(), gml2o::format_double(r.mean).c_str(),
                    gml2o::format_double(r.stddev).c_str(), r.count);
    }
    return ok;
}

int cmd_front(const std::vector<std::string>& dirs, const std::string& out) {
    if (out.empty()) throw gml2o::ConfigError({"--out: required"});
    const auto summary = gml2o::front_cmd(dirs, out);
    for (std::size_t d = 0; d < dirs.size(); ++d) {
        double mean = 0.0;
        for (double v : summary.hypervolume[d]) mean += v / static_cast<double>(summary.hypervolume[d].size());
        std::printf("%s mean hypervolume %s\n", dirs[d].c_str(), gml2o::format_double(mean).c_str());
    }
    return ok;
}

int cmd_check(const std::vector<int>& ids, const Common& c) {
    gml2o::CheckOptions options;
    options.threads = c.threads;
    options.scratch = c.out;
    for (int id : ids) {
        if (id < 1 || id > gml2o::kCheckCount) throw gml2o::ConfigError({"--only: no check " + std::to_string(id)});
    }
    bool all = true;
    for (const auto& r : gml2o::run_checks(ids, options)) {
        std::printf("%s\n", gml2o::format_check(r).c_str());
        std::fflush(stdout);
        all = all && r.passed;
    }
    return all ? ok : check_failure;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Guarded learned optimizers for multi-objective problems"};
    app.require_subcommand(1);
    app.set_version_flag("--version", gml2o::kToolkitVersion);

    Common common;
    std::vector<std::string> dirs;
    std::string metric = "final-max-loss";
    std::vector<int> only;

    const auto add_common = [&](CLI::App* sub, bool with_config) {
        if (with_config) sub->add_option("--config", common.config, "Experiment config (JSON)")->required();
        sub->add_option("--out", common.out, "Output directory");
        sub->add_option("--seeds", common.seeds, "Seed override, comma separated")->delimiter(',');
        sub->add_option("--threads", common.threads, "Worker threads")->check(CLI::PositiveNumber);
    };
    auto* run = app.add_subcommand("run", "Run an experiment config");
    add_common(run, true);
    auto* train = app.add_subcommand("train-ml2o", "Meta-train the learned optimizer");
    add_common(train, true);
    auto* compare = app.add_subcommand("compare", "Aggregate a metric over run directories");
    compare->add_option("dirs", dirs, "Run directories")->required();
    compare->add_option("--metric", metric, "final-max-loss | hypervolume | criticality");
    compare->add_option("--out", common.out, "Directory for compare.csv");
    auto* front = app.add_subcommand("front", "Extract fronts and hypervolumes");
    front->add_option("dirs", dirs, "Run directories")->required();
    front->add_option("--out", common.out, "Output directory")->required();
    auto* check = app.add_subcommand("check", "Run the acceptance checks");
    check->add_option("--only", only, "Check ids, comma separated")->delimiter(',');
    check->add_option("--out", common.out, "Scratch directory");
    check->add_option("--threads", common.threads, "Worker threads")->check(CLI::PositiveNumber);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? ok : config_error;
    }

    try {
        if (*run) return cmd_run(common);
        if (*train) return cmd_train(common);
        if (*compare) return cmd_compare(dirs, metric, common.out);
        if (*front) return cmd_front(dirs, common.out);
        if (*check) return cmd_check(only, common);
    } catch (const gml2o::ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return config_error;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return runtime_error;
    }
    return ok;
}
