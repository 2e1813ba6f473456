#include "gml2o/optimizers.hpp"

#include <algorithm>
#include <cmath>

#include "gml2o/errors.hpp"
#include "gml2o/minnorm.hpp"
#include "gml2o/problems.hpp"
#include "gml2o/tensor.hpp"

namespace gml2o {

double StepSchedule::alpha(std::size_t k) const {
    if (k < 1) throw Error("step schedule: k must be >= 1");
    switch (kind) {
        case Kind::constant: return value;
        case Kind::harmonic: return 1.0 / static_cast<double>(k);
        case Kind::scaled_harmonic: return value / static_cast<double>(k);
    }
    return value;
}

std::size_t sample_size(std::size_t k, const SampleSchedule& schedule) {
    if (k < 1) throw Error("sample_size: k must be >= 1");
    const double p = std::pow(static_cast<double>(k), schedule.q);
    // snap near-integers before the ceiling
    const double nearest = std::round(p);
    const double grown = std::abs(p - nearest) <= 1e-9 * std::max(1.0, p) ? nearest : std::ceil(p);
    return std::max(schedule.nb, static_cast<std::size_t>(grown));
}

namespace {

void apply_direction(OptimizerState& state, double alpha, std::span<const double> direction) {
    for (std::size_t j = 0; j < state.x.size(); ++j) state.x[j] += alpha * direction[j];
}

StepInfo min_norm_update(OptimizerState& state, const GradientMatrix& grads, double alpha, std::size_t samples) {
    const MinNormSolution sol = solve_min_norm(grads);
    apply_direction(state, alpha, sol.descent_direction);
    ++state.k;
    return {alpha, std::sqrt(sol.dual_norm_sq), samples, sol.converged};
}

void check_dim(const MooProblem& problem, const OptimizerState& state) {
    if (state.x.size() != problem.dim()) {
        throw ShapeError("optimizer state has dimension " + std::to_string(state.x.size()) + ", problem expects " +
                         std::to_string(problem.dim()));
    }
}

}  // namespace

StepInfo mgda_step(const MooProblem& problem, OptimizerState& state, const StepSchedule& step) {
    check_dim(problem, state);
    const double alpha = step.alpha(state.k + 1);
    return min_norm_update(state, problem.full_jacobian(state.x), alpha, 0);
}

StepInfo smg_step(const MooProblem& problem, OptimizerState& state, const StepSchedule& step, Rng& rng) {
    check_dim(problem, state);
    const double alpha = step.alpha(state.k + 1);
    return min_norm_update(state, problem.sample_gradient(state.x, rng), alpha, 1);
}

StepInfo dssmg_step(const MooProblem& problem, OptimizerState& state, const StepSchedule& step,
                    const SampleSchedule& samples, Rng& rng) {
    check_dim(problem, state);
    const std::size_t k = state.k + 1;
    const double alpha = step.alpha(k);
    const std::size_t n = sample_size(k, samples);
    return min_norm_update(state, problem.sample_mean_gradient(state.x, n, rng), alpha, n);
}

StepInfo moco_like_step(const MooProblem& problem, OptimizerState& state, const StepSchedule& step,
                        const MomentumTrackingParams& params, Rng& rng) {
    check_dim(problem, state);
    const std::size_t m = problem.objectives();
    const std::size_t n = problem.dim();
    if (state.tracking.rows() != m || state.tracking.cols() != n) state.tracking = GradientMatrix(m, n);
    if (state.lambda.size() != m) state.lambda.assign(m, 1.0 / static_cast<double>(m));

    const double alpha = step.alpha(state.k + 1);
    const GradientMatrix g = problem.sample_gradient(state.x, rng);
    GradientMatrix& y = state.tracking;
    for (std::size_t i = 0; i < m * n; ++i) {
        const double v = params.beta * g.data()[i] + (1.0 - params.beta) * y.data()[i];
        y.data()[i] = std::clamp(v, -params.bound, params.bound);
    }

    std::vector<double> moved(m);
    for (std::size_t i = 0; i < m; ++i) {
        double s = params.rho * state.lambda[i];
        for (std::size_t j = 0; j < m; ++j) s += dot(y.row(i), y.row(j)) * state.lambda[j];
        moved[i] = state.lambda[i] - params.gamma * s;
    }
    if (params.gamma != 0.0) state.lambda = project_to_simplex(moved);

    const std::vector<double> d = combine_rows(y, state.lambda);
    for (std::size_t j = 0; j < n; ++j) state.x[j] -= alpha * d[j];
    ++state.k;
    return {alpha, norm(d), 1, true};
}

StepInfo composite_weight_step(const MooProblem& problem, OptimizerState& state, const StepSchedule& step,
                               double beta, Rng& rng) {
    check_dim(problem, state);
    if (!(beta >= 0.0 && beta <= 1.0)) throw Error("composite_weight_step: beta must lie in [0, 1]");
    const std::size_t m = problem.objectives();
    if (state.lambda.size() != m) state.lambda.assign(m, 1.0 / static_cast<double>(m));

    const double alpha = step.alpha(state.k + 1);
    const GradientMatrix g = problem.sample_gradient(state.x, rng);
    const MinNormSolution sol = solve_min_norm(g);
    for (std::size_t i = 0; i < m; ++i) {
        state.lambda[i] = beta * state.lambda[i] + (1.0 - beta) * sol.weights[i];
    }
    const std::vector<double> d = combine_rows(g, state.lambda);
    for (std::size_t j = 0; j < d.size(); ++j) state.x[j] -= alpha * d[j];
    ++state.k;
    return {alpha, norm(d), 1, sol.converged};
}

ScalarRule parse_scalar_rule(std::string_view name) {
    if (name == "sgd") return ScalarRule::sgd;
    if (name == "momentum") return ScalarRule::momentum;
    if (name == "adam") return ScalarRule::adam;
    if (name == "rmsprop") return ScalarRule::rmsprop;
    if (name == "adadelta") return ScalarRule::adadelta;
    throw ConfigError({"unknown scalarized rule '" + std::string(name) + "'"});
}

const char* scalar_rule_name(ScalarRule rule) noexcept {
    switch (rule) {
        case ScalarRule::sgd: return "sgd";
        case ScalarRule::momentum: return "momentum";
        case ScalarRule::adam: return "adam";
        case ScalarRule::rmsprop: return "rmsprop";
        case ScalarRule::adadelta: return "adadelta";
    }
    return "unknown";
}

StepInfo scalarized_step(const MooProblem& problem, OptimizerState& state, const StepSchedule& step,
                         const ScalarizedParams& params, Rng& rng) {
    check_dim(problem, state);
    const std::size_t n = problem.dim();
    const std::size_t m = problem.objectives();
    const std::size_t k = state.k + 1;
    const double lr = step.alpha(k);

    const GradientMatrix jac = problem.sample_gradient(state.x, rng);
    std::vector<double> g(n, 0.0);
    const double w = 1.0 / static_cast<double>(m);
    for (std::size_t i = 0; i < m; ++i) {
        const auto r = jac.row(i);
        for (std::size_t j = 0; j < n; ++j) g[j] += w * r[j];
    }
    if (state.m1.size() != n) state.m1.assign(n, 0.0);
    if (state.m2.size() != n) state.m2.assign(n, 0.0);

    std::vector<double> delta(n);
    switch (params.rule) {
        case ScalarRule::sgd: delta = g; break;
        case ScalarRule::momentum:
            for (std::size_t j = 0; j < n; ++j) {
                state.m1[j] = params.momentum * state.m1[j] + g[j];
                delta[j] = state.m1[j];
            }
            break;
        case ScalarRule::adam: {
            const double bc1 = 1.0 - std::pow(params.beta1, static_cast<double>(k));
            const double bc2 = 1.0 - std::pow(params.beta2, static_cast<double>(k));
            for (std::size_t j = 0; j < n; ++j) {
                state.m1[j] = params.beta1 * state.m1[j] + (1.0 - params.beta1) * g[j];
                state.m2[j] = params.beta2 * state.m2[j] + (1.0 - params.beta2) * g[j] * g[j];
                delta[j] = (state.m1[j] / bc1) / (std::sqrt(state.m2[j] / bc2) + params.eps);
            }
            break;
        }
        case ScalarRule::rmsprop:
            for (std::size_t j = 0; j < n; ++j) {
                state.m2[j] = params.rmsprop_alpha * state.m2[j] + (1.0 - params.rmsprop_alpha) * g[j] * g[j];
                delta[j] = g[j] / (std::sqrt(state.m2[j]) + params.eps);
            }
            break;
        case ScalarRule::adadelta:
            for (std::size_t j = 0; j < n; ++j) {
                const double rho = params.adadelta_rho;
                state.m2[j] = rho * state.m2[j] + (1.0 - rho) * g[j] * g[j];
                const double upd = std::sqrt(state.m1[j] + params.adadelta_eps) /
                                   std::sqrt(state.m2[j] + params.adadelta_eps) * g[j];
                state.m1[j] = rho * state.m1[j] + (1.0 - rho) * upd * upd;
                delta[j] = upd;
            }
            break;
    }
    for (std::size_t j = 0; j < n; ++j) state.x[j] -= lr * delta[j];
    ++state.k;
    return {lr, norm(delta), 1, true};
}

}  // namespace gml2o
