#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "gml2o/ml2o.hpp"
#include "gml2o/optimizers.hpp"
#include "gml2o/problems.hpp"
#include "gml2o/record.hpp"

namespace gml2o {

struct GuardDecision {
    GuardChoice chosen = GuardChoice::fallback;
    double fallback_delta = 0.0;  // max_i f^i(x_{k+1}) - f^i(z_k)
    double learned_delta = 0.0;   // max_i f^i(u_{k+1}) - f^i(z_k)
};

struct GuardSelection {
    GuardDecision decision;
    std::vector<double> z_next;
    /// Evaluator losses at z_next.
    std::vector<double> f_next;
};

/// Picks the candidate with the smaller max-delta against f(z_k); ties go to
/// the fallback. A learned candidate whose delta is not a number never wins.
/// `f_z` supplies f(z_k) when the caller already has it under the same
/// evaluator; otherwise it is evaluated.
GuardSelection guard_select(std::span<const double> z, std::span<const double> fallback,
                            std::span<const double> learned, const LossEvaluator& evaluator,
                            std::optional<std::vector<double>> f_z = std::nullopt);

struct GuardedRunOptions {
    std::size_t steps = 100;
    StepSchedule step = StepSchedule::harmonic();
    SampleSchedule samples;
    double preprocess_p = kDefaultPreprocessScale;
};

struct GuardedRunResult {
    RunRecord record;
    std::vector<GuardDecision> decisions;
    /// Steps where max_i(f(z_{k+1}) - f(z_k)) > max_i(f(x_{k+1}) - f(z_k)).
    std::size_t invariant_violations = 0;
};

/// Safeguarded learned optimizer with the dynamic-sampling fallback. Each
/// step draws one averaged gradient matrix Y_k at z_k and builds
///   u_{k+1} = z_k - alpha_k g_k          (learned)
///   x_{k+1} = z_k + alpha_k d(Y_k)       (fallback, d the descent direction)
/// then keeps the guard's choice. The recurrent state advances every step.
GuardedRunResult gml2o_run(const MooProblem& problem, const Ml2oParams& params, std::span<const double> x0,
                           const GuardedRunOptions& options, Rng& rng);

/// Deterministic variant: exact Jacobians, constant alpha, MGDA fallback.
/// Rows carry ||d(z_k)|| in the criticality column.
GuardedRunResult gml2o_deterministic_run(const MooProblem& problem, const Ml2oParams& params,
                                         std::span<const double> x0, double alpha, std::size_t steps,
                                         double preprocess_p = kDefaultPreprocessScale);

}  // namespace gml2o
