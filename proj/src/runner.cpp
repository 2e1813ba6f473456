#include "gml2o/runner.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

#include "gml2o/errors.hpp"
#include "gml2o/minnorm.hpp"
#include "gml2o/safeguard.hpp"

namespace gml2o {

const std::vector<std::string>& method_names() {
    static const std::vector<std::string> names = {
        "mgda", "smg",     "dssmg",    "moco", "composite", "sgd",   "momentum",
        "adam", "rmsprop", "adadelta", "ml2o", "gml2o",     "gml2o_deterministic"};
    return names;
}

bool is_learned_method(const std::string& name) {
    return name == "ml2o" || name == "gml2o" || name == "gml2o_deterministic";
}

namespace {

using Clock = std::chrono::steady_clock;

RunRow make_row(std::size_t k, const std::vector<double>& x, std::vector<double> losses) {
    RunRow row;
    row.k = k;
    row.x = x;
    row.losses = std::move(losses);
    return row;
}

const Ml2oParams& learned_params(const MethodSpec& spec) {
    if (!spec.ml2o) throw Error("method '" + spec.name + "' needs learned-optimizer parameters");
    return *spec.ml2o;
}

MethodRun run_ml2o(const MooProblem& problem, const MethodSpec& spec, std::span<const double> x0, std::size_t steps,
                   Rng& rng) {
    const Ml2oParams& params = learned_params(spec);
    params.require_objectives(problem.objectives());
    const auto t0 = Clock::now();
    MethodRun run{RunRecord(problem.name(), spec.name, problem.objectives()), 0};
    std::vector<double> x(x0.begin(), x0.end());
    Ml2oState state = Ml2oState::zeros(problem.dim(), params.objectives(), params.hidden());
    run.record.append(make_row(0, x, problem.eval(x)));
    for (std::size_t k = 1; k <= steps; ++k) {
        const double alpha = spec.step.alpha(k);
        const std::size_t n = spec.dynamic_samples ? sample_size(k, spec.samples) : 0;
        const GradientMatrix y = n == 0 ? problem.sample_gradient(x, rng) : problem.sample_mean_gradient(x, n, rng);
        Ml2oOutput out = ml2o_direction(y, state, params, spec.preprocess_p);
        state = std::move(out.state);
        for (std::size_t j = 0; j < x.size(); ++j) x[j] -= alpha * out.direction[j];
        RunRow row = make_row(k, x, problem.eval(x));
        row.alpha = alpha;
        row.samples = std::max<std::size_t>(n, 1);
        row.direction_norm = norm(out.direction);
        row.wall_time = std::chrono::duration<double>(Clock::now() - t0).count();
        run.record.append(std::move(row));
    }
    return run;
}

}  // namespace

MethodRun run_method(const MooProblem& problem, const MethodSpec& spec, std::span<const double> x0,
                     std::size_t steps, Rng& rng) {
    if (x0.size() != problem.dim()) {
        throw ShapeError("run: initial point has dimension " + std::to_string(x0.size()) + ", problem expects " +
                         std::to_string(problem.dim()));
    }
    const std::string& name = spec.name;
    if (name == "ml2o") return run_ml2o(problem, spec, x0, steps, rng);
    if (name == "gml2o") {
        GuardedRunOptions opts;
        opts.steps = steps;
        opts.step = spec.step;
        opts.samples = spec.samples;
        opts.preprocess_p = spec.preprocess_p;
        GuardedRunResult r = gml2o_run(problem, learned_params(spec), x0, opts, rng);
        return {std::move(r.record), r.invariant_violations};
    }
    if (name == "gml2o_deterministic") {
        if (spec.step.kind != StepSchedule::Kind::constant) {
            throw ConfigError({"optimizer: gml2o_deterministic needs a constant step schedule"});
        }
        GuardedRunResult r =
            gml2o_deterministic_run(problem, learned_params(spec), x0, spec.step.value, steps, spec.preprocess_p);
        return {std::move(r.record), r.invariant_violations};
    }

    const auto t0 = Clock::now();
    MethodRun run{RunRecord(problem.name(), name, problem.objectives()), 0};
    OptimizerState state = OptimizerState::at({x0.begin(), x0.end()});
    RunRow current = make_row(0, state.x, problem.eval(state.x));
    const bool mgda = name == "mgda";
    for (std::size_t k = 1; k <= steps; ++k) {
        StepInfo info;
        if (mgda) {
            info = mgda_step(problem, state, spec.step);
            current.criticality = info.direction_norm;
        } else if (name == "smg") {
            info = smg_step(problem, state, spec.step, rng);
        } else if (name == "dssmg") {
            info = dssmg_step(problem, state, spec.step, spec.samples, rng);
        } else if (name == "moco") {
            info = moco_like_step(problem, state, spec.step, spec.tracking, rng);
        } else if (name == "composite") {
            info = composite_weight_step(problem, state, spec.step, spec.composite_beta, rng);
        } else {
            ScalarizedParams sp = spec.scalar;
            sp.rule = parse_scalar_rule(name);
            info = scalarized_step(problem, state, spec.step, sp, rng);
        }
        run.record.append(std::move(current));
        current = make_row(k, state.x, problem.eval(state.x));
        current.alpha = info.alpha;
        current.direction_norm = info.direction_norm;
        current.samples = info.samples;
        current.wall_time = std::chrono::duration<double>(Clock::now() - t0).count();
    }
    if (mgda) current.criticality = criticality_measure(problem, state.x);
    run.record.append(std::move(current));
    return run;
}

}  // namespace gml2o
