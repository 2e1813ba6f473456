#include "gml2o/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include "gml2o/errors.hpp"
#include "gml2o/metrics.hpp"
#include "gml2o/parallel.hpp"
#include "gml2o/minnorm.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace gml2o {

std::string format_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

void write_file_atomic(const std::string& path, const std::string& text) {
    const fs::path target(path);
    const fs::path tmp = target.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary);
        if (!out) throw Error("cannot write '" + tmp.string() + "'");
        out << text;
        if (!out) throw Error("failed writing '" + tmp.string() + "'");
    }
    fs::rename(tmp, target);
}

json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError({"cannot read config file '" + path + "'"});
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw ConfigError({"config file '" + path + "' is not valid JSON: " + e.what()});
    }
}

std::string resolve_path(const std::string& base_dir, const std::string& path) {
    const fs::path p(path);
    if (p.is_absolute() || base_dir.empty()) return p.lexically_normal().string();
    return (fs::path(base_dir) / p).lexically_normal().string();
}

namespace {

// Field readers: each records a violation instead of throwing, so one pass
// reports every problem in a config.
class Reader {
public:
    Reader(const json& j, std::string where, std::vector<std::string>& errors)
        : j_(j), where_(std::move(where)), errors_(errors) {
        if (!j_.is_object()) errors_.push_back(label("") + "must be a JSON object");
    }

    void allow(std::initializer_list<const char*> keys) {
        if (!j_.is_object()) return;
        std::set<std::string> allowed(keys.begin(), keys.end());
        for (const auto& [key, _] : j_.items()) {
            if (!allowed.contains(key)) errors_.push_back(label(key) + "unknown field");
        }
    }

    bool has(const char* key) const { return j_.is_object() && j_.contains(key); }

    std::optional<std::string> str(const char* key, bool required) {
        if (!has(key)) {
            if (required) errors_.push_back(label(key) + "required");
            return std::nullopt;
        }
        const auto& v = j_.at(key);
        if (!v.is_string()) {
            errors_.push_back(label(key) + "must be a string");
            return std::nullopt;
        }
        return v.get<std::string>();
    }

    std::optional<std::uint64_t> count(const char* key, bool required, std::uint64_t min = 0) {
        if (!has(key)) {
            if (required) errors_.push_back(label(key) + "required");
            return std::nullopt;
        }
        const auto& v = j_.at(key);
        if (!(v.is_number_unsigned() || (v.is_number_integer() && v.get<std::int64_t>() >= 0)) || v.get<std::uint64_t>() < min) {
            errors_.push_back(label(key) + "must be an integer >= " + std::to_string(min));
            return std::nullopt;
        }
        return v.get<std::uint64_t>();
    }

    std::optional<double> number(const char* key, bool required) {
        if (!has(key)) {
            if (required) errors_.push_back(label(key) + "required");
            return std::nullopt;
        }
        const auto& v = j_.at(key);
        if (!v.is_number() || !std::isfinite(v.get<double>())) {
            errors_.push_back(label(key) + "must be a finite number");
            return std::nullopt;
        }
        return v.get<double>();
    }

    std::optional<bool> boolean(const char* key) {
        if (!has(key)) return std::nullopt;
        const auto& v = j_.at(key);
        if (!v.is_boolean()) {
            errors_.push_back(label(key) + "must be true or false");
            return std::nullopt;
        }
        return v.get<bool>();
    }

    const json* object(const char* key, bool required) {
        if (!has(key)) {
            if (required) errors_.push_back(label(key) + "required");
            return nullptr;
        }
        const auto& v = j_.at(key);
        if (!v.is_object()) {
            errors_.push_back(label(key) + "must be a JSON object");
            return nullptr;
        }
        return &v;
    }

    std::string path(const char* key) const { return where_.empty() ? key : where_ + "." + key; }
    std::vector<std::string>& errors() { return errors_; }

private:
    std::string label(const std::string& key) const {
        const std::string p = key.empty() ? where_ : path(key.c_str());
        return p.empty() ? "" : p + ": ";
    }

    const json& j_;
    std::string where_;
    std::vector<std::string>& errors_;
};

std::optional<NamedSpec> read_named(Reader& parent, const char* key, std::vector<std::string>& errors) {
    const json* obj = parent.object(key, true);
    if (!obj) return std::nullopt;
    Reader r(*obj, parent.path(key), errors);
    r.allow({"name", "params"});
    NamedSpec spec;
    const auto name = r.str("name", true);
    if (!name) return std::nullopt;
    spec.name = *name;
    if (const json* p = r.object("params", false)) spec.params = *p;
    return spec;
}

void validate_problem(const NamedSpec& spec, const ProblemRegistry& registry, std::vector<std::string>& errors) {
    if (!registry.contains(spec.name)) {
        errors.push_back("problem.name: unknown problem '" + spec.name + "'");
        return;
    }
    try {
        (void)registry.make(spec.name, spec.params);
    } catch (const ConfigError& e) {
        for (const auto& v : e.violations()) errors.push_back("problem.params: " + v);
    } catch (const Error& e) {
        errors.push_back(std::string("problem.params: ") + e.what());
    }
}

void validate_optimizer(const NamedSpec& spec, const std::string& base_dir, std::vector<std::string>& errors) {
    const auto& names = method_names();
    if (std::find(names.begin(), names.end(), spec.name) == names.end()) {
        errors.push_back("optimizer.name: unknown optimizer '" + spec.name + "'");
        return;
    }
    Reader r(spec.params, "optimizer.params", errors);
    const std::string& n = spec.name;
    if (n == "moco") {
        r.allow({"beta", "gamma", "rho", "bound"});
        for (const char* k : {"beta", "gamma", "rho", "bound"}) r.number(k, false);
    } else if (n == "composite") {
        r.allow({"beta"});
        if (auto b = r.number("beta", false); b && (*b < 0.0 || *b > 1.0)) {
            errors.push_back("optimizer.params.beta: must lie in [0, 1]");
        }
    } else if (n == "momentum") {
        r.allow({"momentum"});
        r.number("momentum", false);
    } else if (n == "adam") {
        r.allow({"beta1", "beta2", "eps"});
        for (const char* k : {"beta1", "beta2", "eps"}) r.number(k, false);
    } else if (n == "rmsprop") {
        r.allow({"alpha", "eps"});
        for (const char* k : {"alpha", "eps"}) r.number(k, false);
    } else if (n == "adadelta") {
        r.allow({"rho", "eps"});
        for (const char* k : {"rho", "eps"}) r.number(k, false);
    } else if (is_learned_method(n)) {
        r.allow({"checkpoint", "dynamic_samples", "preprocess_p"});
        if (auto c = r.str("checkpoint", true)) {
            const std::string path = resolve_path(base_dir, *c);
            if (!fs::exists(path)) errors.push_back("optimizer.params.checkpoint: file '" + path + "' not found");
        }
        r.boolean("dynamic_samples");
        if (auto p = r.number("preprocess_p", false); p && *p <= 0.0) {
            errors.push_back("optimizer.params.preprocess_p: must be positive");
        }
    } else {
        r.allow({});
    }
}

json step_to_json(const StepSchedule& s) {
    switch (s.kind) {
        case StepSchedule::Kind::constant: return {{"kind", "constant"}, {"value", s.value}};
        case StepSchedule::Kind::harmonic: return {{"kind", "harmonic"}};
        case StepSchedule::Kind::scaled_harmonic: return {{"kind", "scaled_harmonic"}, {"value", s.value}};
    }
    return {};
}

}  // namespace

StepSchedule parse_step_schedule(const json& j, const std::string& field, std::vector<std::string>& errors) {
    Reader r(j, field, errors);
    r.allow({"kind", "value"});
    StepSchedule s;
    const auto kind = r.str("kind", true);
    if (!kind) return s;
    if (*kind == "harmonic") return StepSchedule::harmonic();
    if (*kind != "constant" && *kind != "scaled_harmonic") {
        errors.push_back(field + ".kind: unknown schedule '" + *kind + "'");
        return s;
    }
    const auto v = r.number("value", true);
    if (v && *v < 0.0) errors.push_back(field + ".value: must be >= 0");
    const double value = v.value_or(0.0);
    return *kind == "constant" ? StepSchedule::constant(value) : StepSchedule::scaled_harmonic(value);
}

RunConfig RunConfig::from_json(const json& j, const ProblemRegistry& registry, std::string base_dir) {
    std::vector<std::string> errors;
    Reader r(j, "", errors);
    r.allow({"problem", "optimizer", "steps", "step_schedule", "sample_schedule", "seeds", "population", "output"});
    RunConfig c;
    c.base_dir = std::move(base_dir);
    if (auto p = read_named(r, "problem", errors)) {
        c.problem = *p;
        validate_problem(c.problem, registry, errors);
    }
    if (auto o = read_named(r, "optimizer", errors)) {
        c.optimizer = *o;
        validate_optimizer(c.optimizer, c.base_dir, errors);
    }
    if (auto k = r.count("steps", true, 1)) c.steps = *k;
    if (const json* s = r.object("step_schedule", false)) c.step = parse_step_schedule(*s, "step_schedule", errors);
    if (const json* s = r.object("sample_schedule", false)) {
        Reader sr(*s, "sample_schedule", errors);
        sr.allow({"nb", "q"});
        if (auto nb = sr.count("nb", false, 1)) c.samples.nb = *nb;
        if (auto q = sr.number("q", false)) {
            if (*q < 0.0) errors.push_back("sample_schedule.q: must be >= 0");
            c.samples.q = *q;
        }
    }
    if (!r.has("seeds")) {
        errors.push_back("seeds: required");
    } else {
        const json& s = j.at("seeds");
        if (!s.is_array() || s.empty()) {
            errors.push_back("seeds: must be a non-empty list of non-negative integers");
        } else {
            for (const auto& v : s) {
                if (!(v.is_number_unsigned() || (v.is_number_integer() && v.get<std::int64_t>() >= 0))) {
                    errors.push_back("seeds: must be a non-empty list of non-negative integers");
                    c.seeds.clear();
                    break;
                }
                c.seeds.push_back(v.get<std::uint64_t>());
            }
        }
    }
    if (auto p = r.count("population", false, 1)) c.population = *p;
    if (auto o = r.str("output", false)) c.output = resolve_path(c.base_dir, *o);
    if (!errors.empty()) throw ConfigError(std::move(errors));
    return c;
}

json RunConfig::to_json() const {
    json j;
    j["problem"] = {{"name", problem.name}, {"params", problem.params}};
    json opt_params = optimizer.params;
    if (opt_params.contains("checkpoint")) {
        opt_params["checkpoint"] = resolve_path(base_dir, opt_params["checkpoint"].get<std::string>());
    }
    j["optimizer"] = {{"name", optimizer.name}, {"params", opt_params}};
    j["steps"] = steps;
    j["step_schedule"] = step_to_json(step);
    j["sample_schedule"] = {{"nb", samples.nb}, {"q", samples.q}};
    j["seeds"] = seeds;
    if (population) j["population"] = *population;
    return j;
}

TrainConfig TrainConfig::from_json(const json& j, const ProblemRegistry& registry, std::string base_dir) {
    std::vector<std::string> errors;
    Reader r(j, "", errors);
    r.allow({"problem", "hidden", "init_scale", "init_seed", "horizon", "period", "meta_lr", "epochs", "step_schedule",
             "gradients", "preprocess_p", "seed", "resume", "output"});
    TrainConfig c;
    c.base_dir = std::move(base_dir);
    if (auto p = read_named(r, "problem", errors)) {
        c.problem = *p;
        validate_problem(c.problem, registry, errors);
    }
    if (auto h = r.count("hidden", false, 1)) c.hidden = *h;
    if (auto s = r.number("init_scale", false)) {
        if (*s < 0.0) errors.push_back("init_scale: must be >= 0");
        c.init_scale = *s;
    }
    if (auto s = r.count("init_seed", false)) c.init_seed = *s;
    MetaTrainOptions& o = c.options;
    if (auto v = r.count("horizon", false, 1)) o.horizon = *v;
    if (auto v = r.count("period", false, 1)) o.period = *v;
    if (o.period > 0 && o.horizon % o.period != 0) {
        errors.push_back("period: " + std::to_string(o.period) + " does not divide horizon " + std::to_string(o.horizon));
    }
    if (auto v = r.number("meta_lr", false)) {
        if (*v < 0.0) errors.push_back("meta_lr: must be >= 0");
        o.meta_lr = *v;
    }
    if (auto v = r.count("epochs", false)) o.epochs = *v;
    if (const json* s = r.object("step_schedule", false)) o.step = parse_step_schedule(*s, "step_schedule", errors);
    if (auto g = r.str("gradients", false)) {
        if (*g == "exact") {
            o.gradients = GradientMode::exact;
        } else if (*g == "stochastic") {
            o.gradients = GradientMode::stochastic;
        } else {
            errors.push_back("gradients: must be 'exact' or 'stochastic'");
        }
    }
    if (auto p = r.number("preprocess_p", false)) {
        if (*p <= 0.0) errors.push_back("preprocess_p: must be positive");
        o.preprocess_p = *p;
    }
    if (auto s = r.count("seed", false)) o.seed = *s;
    if (auto s = r.str("resume", false)) {
        c.resume = resolve_path(c.base_dir, *s);
        if (!fs::exists(*c.resume)) errors.push_back("resume: file '" + *c.resume + "' not found");
    }
    if (auto out = r.str("output", false)) c.output = resolve_path(c.base_dir, *out);
    if (!errors.empty()) throw ConfigError(std::move(errors));
    return c;
}

json TrainConfig::to_json() const {
    json j;
    j["problem"] = {{"name", problem.name}, {"params", problem.params}};
    j["hidden"] = hidden;
    j["init_scale"] = init_scale;
    j["init_seed"] = init_seed;
    j["horizon"] = options.horizon;
    j["period"] = options.period;
    j["meta_lr"] = options.meta_lr;
    j["epochs"] = options.epochs;
    j["step_schedule"] = step_to_json(options.step);
    j["gradients"] = options.gradients == GradientMode::exact ? "exact" : "stochastic";
    j["preprocess_p"] = options.preprocess_p;
    j["seed"] = options.seed;
    if (resume) j["resume"] = *resume;
    return j;
}

MethodSpec make_method(const RunConfig& config) {
    MethodSpec m;
    m.name = config.optimizer.name;
    m.step = config.step;
    m.samples = config.samples;
    const json& p = config.optimizer.params;
    const auto num = [&](const char* key, double fallback) { return p.contains(key) ? p.at(key).get<double>() : fallback; };
    if (m.name == "moco") {
        m.tracking.beta = num("beta", m.tracking.beta);
        m.tracking.gamma = num("gamma", m.tracking.gamma);
        m.tracking.rho = num("rho", m.tracking.rho);
        m.tracking.bound = num("bound", m.tracking.bound);
    } else if (m.name == "composite") {
        m.composite_beta = num("beta", m.composite_beta);
    } else if (m.name == "momentum") {
        m.scalar.momentum = num("momentum", m.scalar.momentum);
    } else if (m.name == "adam") {
        m.scalar.beta1 = num("beta1", m.scalar.beta1);
        m.scalar.beta2 = num("beta2", m.scalar.beta2);
        m.scalar.eps = num("eps", m.scalar.eps);
    } else if (m.name == "rmsprop") {
        m.scalar.rmsprop_alpha = num("alpha", m.scalar.rmsprop_alpha);
        m.scalar.eps = num("eps", m.scalar.eps);
    } else if (m.name == "adadelta") {
        m.scalar.adadelta_rho = num("rho", m.scalar.adadelta_rho);
        m.scalar.adadelta_eps = num("eps", m.scalar.adadelta_eps);
    } else if (is_learned_method(m.name)) {
        const std::string path = resolve_path(config.base_dir, p.at("checkpoint").get<std::string>());
        m.ml2o = std::make_shared<const Ml2oParams>(load_checkpoint(path));
        if (p.contains("dynamic_samples")) m.dynamic_samples = p.at("dynamic_samples").get<bool>();
        m.preprocess_p = num("preprocess_p", m.preprocess_p);
    }
    return m;
}

std::vector<double> initial_point_for(const MooProblem& problem, std::uint64_t seed, std::size_t member) {
    Rng rng = make_rng(seed, member, "initial-point");
    return problem.initial_point(rng);
}

std::string run_file_name(std::size_t index, std::uint64_t seed, std::size_t member) {
    return "run_" + std::to_string(index) + "_seed" + std::to_string(seed) + "_m" + std::to_string(member) + ".csv";
}

std::string final_file_name(std::size_t index, std::uint64_t seed) {
    return "final_" + std::to_string(index) + "_seed" + std::to_string(seed) + ".csv";
}

std::string run_csv(const RunRecord& record) {
    std::string s = "k";
    for (std::size_t i = 1; i <= record.objectives(); ++i) s += ",f" + std::to_string(i);
    s += ",direction_norm,alpha,samples,guard_choice,criticality\n";
    for (const RunRow& row : record.rows()) {
        s += std::to_string(row.k);
        for (double f : row.losses) s += "," + format_double(f);
        s += "," + format_double(row.direction_norm) + "," + format_double(row.alpha) + "," +
             std::to_string(row.samples) + "," + guard_choice_name(row.guard) + ",";
        if (!std::isnan(row.criticality)) s += format_double(row.criticality);
        s += "\n";
    }
    return s;
}

namespace {

std::string final_csv(const std::vector<RunRow>& finals, std::size_t m, std::size_t n) {
    std::string s = "member";
    for (std::size_t i = 1; i <= m; ++i) s += ",f" + std::to_string(i);
    for (std::size_t j = 1; j <= n; ++j) s += ",x" + std::to_string(j);
    s += "\n";
    for (std::size_t member = 0; member < finals.size(); ++member) {
        s += std::to_string(member);
        for (double f : finals[member].losses) s += "," + format_double(f);
        for (double x : finals[member].x) s += "," + format_double(x);
        s += "\n";
    }
    return s;
}

// Removes files written by a failed command unless disarmed.
class OutputGuard {
public:
    explicit OutputGuard(const std::string& dir) : dir_(dir), created_dir_(!fs::exists(dir)) {
        fs::create_directories(dir);
    }
    ~OutputGuard() {
        if (done_) return;
        std::error_code ec;
        for (const auto& f : files_) {
            fs::remove(f, ec);
            fs::remove(f + ".tmp", ec);
        }
        if (created_dir_) fs::remove_all(dir_, ec);
    }
    std::string add(const std::string& name) {
        const std::string path = (fs::path(dir_) / name).string();
        std::lock_guard lock(mu_);
        files_.push_back(path);
        return path;
    }
    void commit() { done_ = true; }

private:
    std::string dir_;
    bool created_dir_;
    bool done_ = false;
    std::mutex mu_;
    std::vector<std::string> files_;
};

}  // namespace

ExperimentSummary run_experiment(const RunConfig& config, std::size_t threads) {
    if (config.output.empty()) throw ConfigError({"output: required (config field or --out)"});
    const ProblemRegistry registry = ProblemRegistry::with_builtins();
    const std::shared_ptr<const MooProblem> problem = registry.make(config.problem.name, config.problem.params);
    const MethodSpec method = make_method(config);
    if (method.ml2o) method.ml2o->require_objectives(problem->objectives());

    const std::size_t population = config.population.value_or(1);
    const std::size_t jobs = config.seeds.size() * population;
    OutputGuard guard(config.output);

    std::vector<RunRow> finals(jobs);
    std::vector<double> seconds(jobs, 0.0);
    std::vector<std::size_t> violations(jobs, 0);
    std::vector<std::string> run_files(jobs);

    parallel_for(jobs, threads, [&](std::size_t job) {
        const std::size_t index = job / population;
        const std::size_t member = job % population;
        const std::uint64_t seed = config.seeds[index];
        const auto t0 = std::chrono::steady_clock::now();
        const std::vector<double> x0 = initial_point_for(*problem, seed, member);
        Rng rng = make_rng(seed, member, "run");
        MethodRun run = run_method(*problem, method, x0, config.steps, rng);
        const std::string name = run_file_name(index, seed, member);
        write_file_atomic(guard.add(name), run_csv(run.record));
        run_files[job] = name;
        finals[job] = run.record.back();
        violations[job] = run.guard_violations;
        seconds[job] = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    });

    std::size_t total_violations = 0;
    for (std::size_t v : violations) total_violations += v;
    if (total_violations > 0) {
        throw Error("guard invariant violated in " + std::to_string(total_violations) + " steps");
    }

    ExperimentSummary summary;
    summary.output = config.output;
    summary.runs = jobs;
    summary.files = run_files;
    std::vector<std::string> final_files;
    for (std::size_t index = 0; index < config.seeds.size(); ++index) {
        const std::vector<RunRow> rows(finals.begin() + static_cast<std::ptrdiff_t>(index * population),
                                       finals.begin() + static_cast<std::ptrdiff_t>((index + 1) * population));
        const std::string name = final_file_name(index, config.seeds[index]);
        write_file_atomic(guard.add(name), final_csv(rows, problem->objectives(), problem->dim()));
        final_files.push_back(name);
        summary.files.push_back(name);
    }

    std::string timings = "index,seed,member,seconds\n";
    for (std::size_t job = 0; job < jobs; ++job) {
        timings += std::to_string(job / population) + "," + std::to_string(config.seeds[job / population]) + "," +
                   std::to_string(job % population) + "," + format_double(seconds[job]) + "\n";
    }
    write_file_atomic(guard.add("timings.csv"), timings);

    json manifest;
    manifest["command"] = "run";
    manifest["toolkit_version"] = kToolkitVersion;
    manifest["csv_schema_version"] = kCsvSchemaVersion;
    manifest["config"] = config.to_json();
    manifest["seeds"] = config.seeds;
    manifest["population"] = population;
    manifest["objectives"] = problem->objectives();
    manifest["dim"] = problem->dim();
    manifest["runs"] = run_files;
    manifest["finals"] = final_files;
    manifest["timings"] = "timings.csv";
    write_file_atomic(guard.add("manifest.json"), manifest.dump(2) + "\n");
    summary.files.push_back("timings.csv");
    summary.files.push_back("manifest.json");
    guard.commit();
    return summary;
}

ProblemSampler make_problem_sampler(const NamedSpec& problem, const ProblemRegistry& registry) {
    return [problem, &registry](std::size_t, Rng& rng) {
        json params = problem.params;
        params["seed"] = rng();
        TrainingTask task;
        task.problem = registry.make(problem.name, params);
        task.x0 = task.problem->initial_point(rng);
        return task;
    };
}

TrainSummary train_ml2o_cmd(const TrainConfig& config) {
    if (config.output.empty()) throw ConfigError({"output: required (config field or --out)"});
    const ProblemRegistry registry = ProblemRegistry::with_builtins();
    const std::size_t m = registry.make(config.problem.name, config.problem.params)->objectives();

    CheckpointInfo info;
    Ml2oParams params = config.resume ? load_checkpoint(*config.resume, &info)
                                      : Ml2oParams::random(m, config.hidden, config.init_seed, config.init_scale);
    params.require_objectives(m);
    if (info.epochs_completed > config.options.epochs) {
        throw ConfigError({"epochs: checkpoint already holds " + std::to_string(info.epochs_completed) +
                           " epochs, more than the requested " + std::to_string(config.options.epochs)});
    }
    MetaTrainOptions options = config.options;
    options.first_epoch = info.epochs_completed;
    options.epochs = config.options.epochs - info.epochs_completed;

    OutputGuard guard(config.output);
    const MetaTrainResult result = meta_train(make_problem_sampler(config.problem, registry), std::move(params), options);

    TrainSummary summary;
    summary.checkpoint = guard.add("checkpoint.json");
    save_checkpoint(result.params, summary.checkpoint, {config.options.epochs});
    std::string trace = "epoch,period,loss\n";
    for (const MetaTraceRow& row : result.trace) {
        trace += std::to_string(row.epoch) + "," + std::to_string(row.period) + "," + format_double(row.loss) + "\n";
    }
    summary.trace = guard.add("meta_trace.csv");
    write_file_atomic(summary.trace, trace);
    summary.epochs_run = options.epochs;
    summary.trace_rows = result.trace.size();

    json manifest;
    manifest["command"] = "train-ml2o";
    manifest["toolkit_version"] = kToolkitVersion;
    manifest["csv_schema_version"] = kCsvSchemaVersion;
    manifest["config"] = config.to_json();
    manifest["epochs_completed"] = config.options.epochs;
    manifest["first_epoch"] = options.first_epoch;
    manifest["checkpoint"] = "checkpoint.json";
    manifest["trace"] = "meta_trace.csv";
    write_file_atomic(guard.add("manifest.json"), manifest.dump(2) + "\n");
    guard.commit();
    return summary;
}

CompareMetric parse_compare_metric(const std::string& name) {
    if (name == "final-max-loss") return CompareMetric::final_max_loss;
    if (name == "hypervolume") return CompareMetric::hypervolume;
    if (name == "criticality") return CompareMetric::criticality;
    throw ConfigError({"metric: unknown metric '" + name + "' (final-max-loss, hypervolume, criticality)"});
}

const char* compare_metric_name(CompareMetric metric) noexcept {
    switch (metric) {
        case CompareMetric::final_max_loss: return "final-max-loss";
        case CompareMetric::hypervolume: return "hypervolume";
        case CompareMetric::criticality: return "criticality";
    }
    return "";
}

namespace {

struct LoadedRun {
    std::string dir;
    json manifest;
    std::size_t objectives = 0;
    /// finals[s][member] = final row (losses, x)
    std::vector<std::vector<RunRow>> finals;
};

std::vector<double> parse_csv_numbers(const std::string& line) {
    std::vector<double> out;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) out.push_back(std::stod(cell));
    return out;
}

LoadedRun load_run(const std::string& dir) {
    const fs::path mpath = fs::path(dir) / "manifest.json";
    if (!fs::exists(mpath)) throw Error("'" + dir + "' is not a run directory (no manifest.json)");
    LoadedRun run;
    run.dir = dir;
    std::ifstream in(mpath);
    try {
        run.manifest = json::parse(in);
        if (run.manifest.at("command") != "run") throw Error("'" + dir + "' does not hold a run");
        run.objectives = run.manifest.at("objectives").get<std::size_t>();
        for (const auto& name : run.manifest.at("finals")) {
            std::ifstream f(fs::path(dir) / name.get<std::string>());
            if (!f) throw Error("missing file '" + name.get<std::string>() + "' in '" + dir + "'");
            std::string line;
            std::getline(f, line);
            std::vector<RunRow> rows;
            while (std::getline(f, line)) {
                if (line.empty()) continue;
                const std::vector<double> v = parse_csv_numbers(line);
                if (v.size() < 1 + run.objectives) throw Error("malformed final-point file in '" + dir + "'");
                RunRow row;
                row.losses.assign(v.begin() + 1, v.begin() + 1 + static_cast<std::ptrdiff_t>(run.objectives));
                row.x.assign(v.begin() + 1 + static_cast<std::ptrdiff_t>(run.objectives), v.end());
                rows.push_back(std::move(row));
            }
            run.finals.push_back(std::move(rows));
        }
    } catch (const json::exception& e) {
        throw Error("corrupt manifest in '" + dir + "': " + e.what());
    } catch (const std::invalid_argument&) {
        throw Error("malformed number in a final-point file of '" + dir + "'");
    }
    if (run.finals.empty()) throw Error("run directory '" + dir + "' holds no runs");
    return run;
}

std::vector<LoadedRun> load_runs(const std::vector<std::string>& dirs) {
    if (dirs.empty()) throw ConfigError({"no run directories given"});
    std::vector<LoadedRun> runs;
    for (const auto& d : dirs) runs.push_back(load_run(d));
    const json& c0 = runs[0].manifest.at("config");
    for (const auto& r : runs) {
        const json& c = r.manifest.at("config");
        if (c.at("problem") != c0.at("problem")) {
            throw Error("runs '" + runs[0].dir + "' and '" + r.dir + "' use different problems");
        }
        if (c.at("steps") != c0.at("steps")) {
            throw Error("runs '" + runs[0].dir + "' and '" + r.dir + "' use different step counts");
        }
    }
    return runs;
}

std::vector<std::vector<double>> loss_points(const std::vector<RunRow>& rows) {
    std::vector<std::vector<double>> pts;
    for (const auto& r : rows) pts.push_back(r.losses);
    return pts;
}

std::vector<double> shared_reference(const std::vector<LoadedRun>& runs) {
    std::vector<std::vector<std::vector<double>>> sets;
    for (const auto& r : runs) {
        for (const auto& seed_rows : r.finals) sets.push_back(loss_points(seed_rows));
    }
    return hypervolume_reference(sets, 0.1);
}

std::vector<std::vector<double>> front_points(const std::vector<RunRow>& rows) {
    std::vector<ObjectivePoint> pts;
    for (std::size_t i = 0; i < rows.size(); ++i) pts.push_back({rows[i].losses, i});
    std::vector<std::vector<double>> front;
    for (auto& p : extract_front(pts)) front.push_back(std::move(p.values));
    return front;
}

}  // namespace

std::vector<CompareRow> compare_cmd(const std::vector<std::string>& run_dirs, CompareMetric metric,
                                    const std::string& out) {
    const std::vector<LoadedRun> runs = load_runs(run_dirs);
    std::vector<double> reference;
    if (metric == CompareMetric::hypervolume) reference = shared_reference(runs);
    std::shared_ptr<const MooProblem> problem;
    if (metric == CompareMetric::criticality) {
        const json& p = runs[0].manifest.at("config").at("problem");
        problem = ProblemRegistry::with_builtins().make(p.at("name").get<std::string>(), p.at("params"));
    }

    std::vector<CompareRow> rows;
    for (const LoadedRun& run : runs) {
        CompareRow row;
        row.run = run.dir;
        row.optimizer = run.manifest.at("config").at("optimizer").at("name").get<std::string>();
        for (const auto& seed_rows : run.finals) {
            double value = 0.0;
            if (metric == CompareMetric::hypervolume) {
                value = hypervolume(front_points(seed_rows), reference);
            } else {
                for (const RunRow& r : seed_rows) {
                    value += metric == CompareMetric::final_max_loss
                                 ? *std::max_element(r.losses.begin(), r.losses.end())
                                 : criticality_measure(*problem, r.x);
                }
                value /= static_cast<double>(seed_rows.size());
            }
            row.values.push_back(value);
        }
        row.count = row.values.size();
        for (double v : row.values) row.mean += v;
        row.mean /= static_cast<double>(row.count);
        if (row.count > 1) {
            double ss = 0.0;
            for (double v : row.values) ss += (v - row.mean) * (v - row.mean);
            row.stddev = std::sqrt(ss / static_cast<double>(row.count - 1));
        }
        rows.push_back(std::move(row));
    }

    if (!out.empty()) {
        fs::create_directories(out);
        std::string csv = "run,optimizer,metric,mean,std,count\n";
        for (const auto& r : rows) {
            csv += r.run + "," + r.optimizer + "," + compare_metric_name(metric) + "," + format_double(r.mean) + "," +
                   format_double(r.stddev) + "," + std::to_string(r.count) + "\n";
        }
        write_file_atomic((fs::path(out) / "compare.csv").string(), csv);
    }
    return rows;
}

FrontSummary front_cmd(const std::vector<std::string>& run_dirs, const std::string& out) {
    const std::vector<LoadedRun> runs = load_runs(run_dirs);
    FrontSummary summary;
    summary.reference = shared_reference(runs);
    if (!out.empty()) fs::create_directories(out);
    std::string hv_csv = "run_index,run,seed_index,front_size,hypervolume\n";
    for (std::size_t d = 0; d < runs.size(); ++d) {
        std::vector<double> hv;
        for (std::size_t s = 0; s < runs[d].finals.size(); ++s) {
            const auto front = front_points(runs[d].finals[s]);
            hv.push_back(hypervolume(front, summary.reference));
            hv_csv += std::to_string(d) + "," + runs[d].dir + "," + std::to_string(s) + "," +
                      std::to_string(front.size()) + "," + format_double(hv.back()) + "\n";
            if (out.empty()) continue;
            std::string csv;
            for (std::size_t i = 1; i <= runs[d].objectives; ++i) csv += (i > 1 ? ",f" : "f") + std::to_string(i);
            csv += "\n";
            for (const auto& p : front) {
                for (std::size_t i = 0; i < p.size(); ++i) csv += (i ? "," : "") + format_double(p[i]);
                csv += "\n";
            }
            write_file_atomic(
                (fs::path(out) / ("front_" + std::to_string(d) + "_" + std::to_string(s) + ".csv")).string(), csv);
        }
        summary.hypervolume.push_back(std::move(hv));
    }
    if (!out.empty()) {
        std::string ref = "objective,reference\n";
        for (std::size_t i = 0; i < summary.reference.size(); ++i) {
            ref += std::to_string(i + 1) + "," + format_double(summary.reference[i]) + "\n";
        }
        write_file_atomic((fs::path(out) / "reference.csv").string(), ref);
        write_file_atomic((fs::path(out) / "hypervolume.csv").string(), hv_csv);
    }
    return summary;
}

}  // namespace gml2o
