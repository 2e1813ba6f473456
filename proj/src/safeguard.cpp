#include "gml2o/safeguard.hpp"

#include <chrono>
#include <cmath>

#include "gml2o/errors.hpp"
#include "gml2o/minnorm.hpp"

namespace gml2o {

namespace {

double max_delta(std::span<const double> f, std::span<const double> base) {
    if (f.size() != base.size() || f.empty()) throw ShapeError("guard: evaluator returned losses of the wrong length");
    return meta_loss(f, base);
}

std::vector<double> checked_eval(const LossEvaluator& evaluator, std::span<const double> x) {
    if (!evaluator) throw Error("guard: no loss evaluator");
    return evaluator(x);
}

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct StepInputs {
    GradientMatrix y;
    double alpha = 0.0;
    std::size_t samples = 0;
};

// Shared loop of both guarded variants; `draw` supplies Y_k, alpha_k and N_k.
template <class Draw>
GuardedRunResult guarded_loop(const MooProblem& problem, const Ml2oParams& params, std::span<const double> x0,
                              std::size_t steps, double p, const char* name, bool record_criticality, Rng& rng,
                              Draw draw) {
    params.require_objectives(problem.objectives());
    if (x0.size() != problem.dim()) throw ShapeError("guarded run: initial point dimension mismatch");
    const auto t0 = Clock::now();
    const bool reuse = problem.guard_is_objective();

    GuardedRunResult result;
    result.record = RunRecord(problem.name(), name, problem.objectives());
    std::vector<double> z(x0.begin(), x0.end());
    Ml2oState state = Ml2oState::zeros(problem.dim(), params.objectives(), params.hidden());

    std::vector<double> f_z = problem.eval(z);
    RunRow current;
    current.x = z;
    current.losses = f_z;

    for (std::size_t k = 1; k <= steps; ++k) {
        StepInputs in = draw(z, k);
        const MinNormSolution sol = solve_min_norm(in.y);
        if (record_criticality) current.criticality = std::sqrt(sol.dual_norm_sq);
        result.record.append(std::move(current));

        Ml2oOutput learned = ml2o_direction(in.y, state, params, p);
        state = std::move(learned.state);

        std::vector<double> u = z;
        std::vector<double> x = z;
        for (std::size_t j = 0; j < z.size(); ++j) {
            u[j] -= in.alpha * learned.direction[j];
            x[j] += in.alpha * sol.descent_direction[j];
        }

        const LossEvaluator evaluator = problem.guard_evaluator(rng);
        GuardSelection sel = guard_select(z, x, u, evaluator, reuse ? std::optional(f_z) : std::nullopt);
        result.decisions.push_back(sel.decision);

        // Inline check of the per-step guarantee.
        const double chosen_delta = reuse ? max_delta(sel.f_next, f_z)
                                          : (sel.decision.chosen == GuardChoice::fallback ? sel.decision.fallback_delta
                                                                                          : sel.decision.learned_delta);
        if (!(chosen_delta <= sel.decision.fallback_delta)) ++result.invariant_violations;

        const bool took_learned = sel.decision.chosen == GuardChoice::learned;
        z = std::move(sel.z_next);
        f_z = reuse ? std::move(sel.f_next) : problem.eval(z);

        current = RunRow{};
        current.k = k;
        current.x = z;
        current.losses = f_z;
        current.direction_norm = took_learned ? norm(learned.direction) : std::sqrt(sol.dual_norm_sq);
        current.alpha = in.alpha;
        current.samples = in.samples;
        current.guard = sel.decision.chosen;
        current.wall_time = seconds_since(t0);
    }
    if (record_criticality) current.criticality = std::sqrt(solve_min_norm(problem.full_jacobian(z)).dual_norm_sq);
    result.record.append(std::move(current));
    return result;
}

}  // namespace

GuardSelection guard_select(std::span<const double> z, std::span<const double> fallback,
                            std::span<const double> learned, const LossEvaluator& evaluator,
                            std::optional<std::vector<double>> f_z) {
    if (fallback.size() != z.size() || learned.size() != z.size()) {
        throw ShapeError("guard_select: candidates and base point differ in dimension");
    }
    const std::vector<double> base = f_z ? std::move(*f_z) : checked_eval(evaluator, z);
    std::vector<double> f_fallback = checked_eval(evaluator, fallback);
    std::vector<double> f_learned = checked_eval(evaluator, learned);

    GuardSelection sel;
    sel.decision.fallback_delta = max_delta(f_fallback, base);
    sel.decision.learned_delta = max_delta(f_learned, base);
    if (sel.decision.learned_delta < sel.decision.fallback_delta) {
        sel.decision.chosen = GuardChoice::learned;
        sel.z_next.assign(learned.begin(), learned.end());
        sel.f_next = std::move(f_learned);
    } else {
        sel.decision.chosen = GuardChoice::fallback;
        sel.z_next.assign(fallback.begin(), fallback.end());
        sel.f_next = std::move(f_fallback);
    }
    return sel;
}

GuardedRunResult gml2o_run(const MooProblem& problem, const Ml2oParams& params, std::span<const double> x0,
                           const GuardedRunOptions& options, Rng& rng) {
    return guarded_loop(problem, params, x0, options.steps, options.preprocess_p, "gml2o", false, rng,
                        [&](const std::vector<double>& z, std::size_t k) {
                            const std::size_t n = sample_size(k, options.samples);
                            return StepInputs{problem.sample_mean_gradient(z, n, rng), options.step.alpha(k), n};
                        });
}

GuardedRunResult gml2o_deterministic_run(const MooProblem& problem, const Ml2oParams& params,
                                         std::span<const double> x0, double alpha, std::size_t steps,
                                         double preprocess_p) {
    if (!(alpha >= 0.0) || !std::isfinite(alpha)) throw Error("gml2o_deterministic_run: alpha must be >= 0");
    Rng unused(0);
    return guarded_loop(problem, params, x0, steps, preprocess_p, "gml2o_deterministic", true, unused,
                        [&](const std::vector<double>& z, std::size_t) {
                            return StepInputs{problem.full_jacobian(z), alpha, 0};
                        });
}

}  // namespace gml2o
