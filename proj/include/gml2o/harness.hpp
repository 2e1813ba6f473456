#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "gml2o/ml2o.hpp"
#include "gml2o/optimizers.hpp"
#include "gml2o/problems.hpp"
#include "gml2o/record.hpp"
#include "gml2o/runner.hpp"
#include "json.hpp"

namespace gml2o {

inline constexpr const char* kToolkitVersion = "0.1.0";
inline constexpr int kCsvSchemaVersion = 1;

struct NamedSpec {
    std::string name;
    nlohmann::json params = nlohmann::json::object();
};

struct RunConfig {
    NamedSpec problem;
    NamedSpec optimizer;
    std::size_t steps = 0;
    StepSchedule step = StepSchedule::constant(0.01);
    SampleSchedule samples;
    std::vector<std::uint64_t> seeds;
    /// Initial points per seed; 1 when absent.
    std::optional<std::size_t> population;
    std::string output;
    /// Directory relative paths in the config resolve against.
    std::string base_dir;

    /// Throws ConfigError listing every violated field.
    static RunConfig from_json(const nlohmann::json& j, const ProblemRegistry& registry, std::string base_dir = "");
    nlohmann::json to_json() const;
};

struct TrainConfig {
    NamedSpec problem;
    std::size_t hidden = 8;
    double init_scale = 0.1;
    std::uint64_t init_seed = 0;
    MetaTrainOptions options;
    std::optional<std::string> resume;
    std::string output;
    std::string base_dir;

    static TrainConfig from_json(const nlohmann::json& j, const ProblemRegistry& registry, std::string base_dir = "");
    nlohmann::json to_json() const;
};

/// Reads a JSON document; parse failures become ConfigError.
nlohmann::json read_json_file(const std::string& path);

/// Resolves a path from a config against its base directory.
std::string resolve_path(const std::string& base_dir, const std::string& path);

StepSchedule parse_step_schedule(const nlohmann::json& j, const std::string& field, std::vector<std::string>& errors);

/// Builds the method for a validated config (loads checkpoints).
MethodSpec make_method(const RunConfig& config);

/// Draws the initial point of population member `member`.
std::vector<double> initial_point_for(const MooProblem& problem, std::uint64_t seed, std::size_t member);

std::string run_file_name(std::size_t index, std::uint64_t seed, std::size_t member);
std::string final_file_name(std::size_t index, std::uint64_t seed);

/// CSV text of one run: k, f1..fM, direction_norm, alpha, samples,
/// guard_choice, criticality. Floats use 17 significant digits.
std::string run_csv(const RunRecord& record);

struct ExperimentSummary {
    std::string output;
    std::vector<std::string> files;
    std::size_t runs = 0;
};

/// Executes every (seed, member) run and writes one trace CSV per run, one
/// final-point CSV per seed, timings.csv and manifest.json. Output bytes
/// depend only on the config (timings.csv aside). On failure the files
/// written so far are removed.
ExperimentSummary run_experiment(const RunConfig& config, std::size_t threads = 1);

struct TrainSummary {
    std::string checkpoint;
    std::string trace;
    std::size_t epochs_run = 0;
    std::size_t trace_rows = 0;
};

/// Meta-trains the learned optimizer; writes checkpoint.json,
/// meta_trace.csv (epoch, period, loss) and manifest.json.
TrainSummary train_ml2o_cmd(const TrainConfig& config);

/// Problem sampler used by training: each epoch draws a fresh problem seed
/// and initial point from the epoch stream.
ProblemSampler make_problem_sampler(const NamedSpec& problem, const ProblemRegistry& registry);

enum class CompareMetric { final_max_loss, hypervolume, criticality };
CompareMetric parse_compare_metric(const std::string& name);
const char* compare_metric_name(CompareMetric metric) noexcept;

struct CompareRow {
    std::string run;
    std::string optimizer;
    double mean = 0.0;
    double stddev = 0.0;
    std::size_t count = 0;
    std::vector<double> values;  // one per seed entry
};

/// Aggregates the metric over seeds for every run directory. Writes
/// compare.csv into `out` when it is non-empty.
std::vector<CompareRow> compare_cmd(const std::vector<std::string>& run_dirs, CompareMetric metric,
                                    const std::string& out = "");

struct FrontSummary {
    std::vector<double> reference;
    /// hypervolume[d][s]: run directory d, seed entry s.
    std::vector<std::vector<double>> hypervolume;
};

/// Extracts the nondominated final points of every seed of every run and
/// their hypervolume against a shared reference (componentwise max over all
/// final points plus a 10% margin).
FrontSummary front_cmd(const std::vector<std::string>& run_dirs, const std::string& out);

/// Writes text to path via a temporary file and rename.
void write_file_atomic(const std::string& path, const std::string& text);

/// printf("%.17g") formatting used throughout the CSV outputs.
std::string format_double(double v);

}  // namespace gml2o
