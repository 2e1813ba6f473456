#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "gml2o/gradient_matrix.hpp"
#include "gml2o/rng.hpp"

namespace gml2o {

class MooProblem;

/// Step size alpha_k for k >= 1.
struct StepSchedule {
    enum class Kind { constant, harmonic, scaled_harmonic };

    Kind kind = Kind::constant;
    double value = 0.01;

    static StepSchedule constant(double alpha) { return {Kind::constant, alpha}; }
    static StepSchedule harmonic() { return {Kind::harmonic, 1.0}; }
    static StepSchedule scaled_harmonic(double c) { return {Kind::scaled_harmonic, c}; }

    double alpha(std::size_t k) const;
};

/// Dynamic sample size N_k = max(N_B, ceil(k^q)).
struct SampleSchedule {
    std::size_t nb = 1;
    double q = 0.1;
};

std::size_t sample_size(std::size_t k, const SampleSchedule& schedule);

/// Iterate plus method-specific memory. `k` counts completed steps; the
/// next step uses iteration index k + 1.
struct OptimizerState {
    std::vector<double> x;
    std::size_t k = 0;
    /// Simplex weights carried by the composite and momentum-tracking methods.
    std::vector<double> lambda;
    /// Tracking variables y^i of the momentum-tracking method.
    GradientMatrix tracking;
    /// First/second moment buffers of the scalarized rules.
    std::vector<double> m1;
    std::vector<double> m2;

    static OptimizerState at(std::vector<double> x0) {
        OptimizerState s;
        s.x = std::move(x0);
        return s;
    }
};

struct StepInfo {
    double alpha = 0.0;
    /// Norm of the applied direction (before scaling by alpha).
    double direction_norm = 0.0;
    /// Gradient draws averaged for this step (0 for exact gradients).
    std::size_t samples = 0;
    bool solver_converged = true;
};

/// x <- x + alpha_k * descent_direction(full Jacobian).
StepInfo mgda_step(const MooProblem& problem, OptimizerState& state, const StepSchedule& step);

/// Min-norm direction from a single noisy draw of every gradient.
StepInfo smg_step(const MooProblem& problem, OptimizerState& state, const StepSchedule& step, Rng& rng);

/// Min-norm direction from gradients averaged over N_k draws.
StepInfo dssmg_step(const MooProblem& problem, OptimizerState& state, const StepSchedule& step,
                    const SampleSchedule& samples, Rng& rng);

struct MomentumTrackingParams {
    double beta = 0.5;
    double gamma = 0.1;
    double rho = 0.0;
    /// Tracking variables are clipped to [-bound, bound]^N.
    double bound = 1e3;
};

/// Momentum-like gradient manipulation:
///   y^i    <- clip(beta g^i + (1 - beta) y^i)
///   lambda <- proj_simplex(lambda - gamma (Y Y^T + rho I) lambda)
///   x      <- x - alpha sum_i lambda_i y^i
/// The direction uses the freshly updated (y, lambda) pair.
StepInfo moco_like_step(const MooProblem& problem, OptimizerState& state, const StepSchedule& step,
                        const MomentumTrackingParams& params, Rng& rng);

/// lambda_k = beta lambda_{k-1} + (1 - beta) lambda*(x_k, xi_k); x <- x - alpha sum_i lambda_k^i g^i.
StepInfo composite_weight_step(const MooProblem& problem, OptimizerState& state, const StepSchedule& step,
                               double beta, Rng& rng);

enum class ScalarRule { sgd, momentum, adam, rmsprop, adadelta };

/// Throws ConfigError for unknown names.
ScalarRule parse_scalar_rule(std::string_view name);
const char* scalar_rule_name(ScalarRule rule) noexcept;

/// Hyperparameters of the scalarized baselines (PyTorch defaults).
struct ScalarizedParams {
    ScalarRule rule = ScalarRule::sgd;
    double momentum = 0.9;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    double rmsprop_alpha = 0.99;
    double adadelta_rho = 0.9;
    double adadelta_eps = 1e-6;
};

/// One update of the named rule on (1/M) sum_i f^i using a stochastic draw.
/// The step schedule provides the learning rate.
StepInfo scalarized_step(const MooProblem& problem, OptimizerState& state, const StepSchedule& step,
                         const ScalarizedParams& params, Rng& rng);

}  // namespace gml2o
