#pragma once

#include <atomic>
#include <cstddef>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "gml2o/gradient_matrix.hpp"
#include "gml2o/rng.hpp"
#include "json.hpp"

namespace gml2o {

/// Per-coordinate box [lower, upper]. Used only to draw initial points.
struct Box {
    std::vector<double> lower;
    std::vector<double> upper;
};

/// Loss evaluator handed to the guard for one step.
using LossEvaluator = std::function<std::vector<double>(std::span<const double>)>;

/// Differentiable vector objective F: R^N -> R^M with deterministic and
/// stochastic gradient access. Implementations are immutable after
/// construction; all randomness comes from the caller's Rng.
class MooProblem {
public:
    virtual ~MooProblem() = default;

    virtual std::string name() const = 0;
    virtual std::size_t dim() const = 0;
    virtual std::size_t objectives() const = 0;

    virtual std::vector<double> eval(std::span<const double> x) const = 0;
    virtual GradientMatrix full_jacobian(std::span<const double> x) const = 0;

    /// One noisy draw of every objective gradient. Exact by default.
    virtual GradientMatrix sample_gradient(std::span<const double> x, Rng& rng) const;
    /// Average of `n` draws. The default averages n independent
    /// sample_gradient() calls.
    virtual GradientMatrix sample_mean_gradient(std::span<const double> x, std::size_t n, Rng& rng) const;
    virtual bool is_stochastic() const { return false; }

    virtual std::optional<Box> domain() const { return std::nullopt; }
    /// Uniform draw from the box; problems without a box override this.
    virtual std::vector<double> initial_point(Rng& rng) const;

    /// Loss function the guard compares candidates with for one step. The
    /// default is the exact objective and consumes no randomness.
    virtual LossEvaluator guard_evaluator(Rng& rng) const;
    /// True when guard_evaluator() returns eval() itself, so losses from
    /// one step can be reused as the baseline of the next.
    virtual bool guard_is_objective() const { return true; }

    virtual bool has_known_front() const { return false; }
    /// Euclidean distance from x to the Pareto set.
    virtual double distance_to_front(std::span<const double> x) const;
};

/// f_i(x) = 1/2 (x - c_i)^T A_i (x - c_i), i = 1, 2, with additive Gaussian
/// gradient noise of scale noise_sigma per entry.
class QuadraticPair final : public MooProblem {
public:
    /// Identity curvature.
    QuadraticPair(std::vector<double> c1, std::vector<double> c2, double noise_sigma);
    /// General symmetric positive definite A1, A2 (row-major N x N).
    QuadraticPair(std::vector<double> c1, std::vector<double> c2, std::vector<double> a1, std::vector<double> a2,
                  double noise_sigma);

    std::string name() const override { return "quadratic_pair"; }
    std::size_t dim() const override { return c1_.size(); }
    std::size_t objectives() const override { return 2; }
    std::vector<double> eval(std::span<const double> x) const override;
    GradientMatrix full_jacobian(std::span<const double> x) const override;
    GradientMatrix sample_gradient(std::span<const double> x, Rng& rng) const override;
    bool is_stochastic() const override { return noise_sigma_ > 0.0; }
    std::optional<Box> domain() const override;
    bool has_known_front() const override { return identity_; }
    double distance_to_front(std::span<const double> x) const override;

    const std::vector<double>& center(std::size_t i) const { return i == 0 ? c1_ : c2_; }
    double noise_sigma() const noexcept { return noise_sigma_; }
    bool identity_curvature() const noexcept { return identity_; }
    /// Largest eigenvalue over A1, A2 (gradient Lipschitz constant).
    double lipschitz() const;

private:
    double quad(std::span<const double> x, const std::vector<double>& c, const std::vector<double>& a) const;
    void grad_into(std::span<const double> x, const std::vector<double>& c, const std::vector<double>& a,
                   std::span<double> out) const;

    std::vector<double> c1_, c2_;
    std::vector<double> a1_, a2_;
    bool identity_ = true;
    double noise_sigma_ = 0.0;
};

/// Identity quadratic pair with centers drawn U[-1, 1]^N from `seed`.
std::shared_ptr<QuadraticPair> make_quadratic_pair(std::size_t n, std::uint64_t seed, double noise_sigma);

/// Two-label classification data over a shared input.
struct MtlDataset {
    std::size_t input_dim = 0;
    std::size_t classes = 0;
    std::vector<double> inputs;  // samples x input_dim, row-major
    std::vector<int> labels1;
    std::vector<int> labels2;

    std::size_t samples() const noexcept { return labels1.size(); }
};

/// Gaussian-mixture data: each sample carries two independent labels and
/// its input is the sum of the two class means plus isotropic noise.
MtlDataset make_mtl_dataset(std::uint64_t seed, std::size_t samples, std::size_t classes, std::size_t input_dim = 16);

/// Hard-parameter-sharing learner: tanh encoder shared by two linear +
/// softmax heads; objective i is the mean cross-entropy of task i.
///
/// Decision vector layout: [W1 (hidden x input), b1 (hidden),
/// V1 (classes x hidden), c1 (classes), V2 (classes x hidden), c2 (classes)].
class ToyMtlProblem final : public MooProblem {
public:
    ToyMtlProblem(MtlDataset data, std::size_t hidden, std::size_t batch, std::size_t guard_batch = 256);

    std::string name() const override { return "toy_mtl"; }
    std::size_t dim() const override;
    std::size_t objectives() const override { return 2; }
    std::vector<double> eval(std::span<const double> x) const override;
    GradientMatrix full_jacobian(std::span<const double> x) const override;
    /// Per-task mean gradient over a uniform batch drawn without replacement.
    GradientMatrix sample_gradient(std::span<const double> x, Rng& rng) const override;
    /// Batch of min(n, samples) drawn without replacement.
    GradientMatrix sample_mean_gradient(std::span<const double> x, std::size_t n, Rng& rng) const override;
    bool is_stochastic() const override { return batch_ < data_.samples(); }
    /// Gaussian initialisation: encoder std 1/sqrt(input), heads std 0.01.
    std::vector<double> initial_point(Rng& rng) const override;
    /// Losses on a fresh guard batch shared by every call of the evaluator.
    LossEvaluator guard_evaluator(Rng& rng) const override;
    bool guard_is_objective() const override { return false; }

    const MtlDataset& data() const noexcept { return data_; }
    std::size_t hidden() const noexcept { return hidden_; }
    std::size_t batch() const noexcept { return batch_; }

    std::vector<double> eval_batch(std::span<const double> x, std::span<const std::size_t> idx) const;
    GradientMatrix jacobian_batch(std::span<const double> x, std::span<const std::size_t> idx) const;

private:
    std::vector<std::size_t> draw_batch(std::size_t n, Rng& rng) const;

    MtlDataset data_;
    std::size_t hidden_;
    std::size_t batch_;
    std::size_t guard_batch_;
    std::vector<std::size_t> all_;
};

std::shared_ptr<ToyMtlProblem> make_toy_mtl(std::uint64_t seed, std::size_t samples, std::size_t classes,
                                            std::size_t batch);

/// Wraps a problem and counts objective evaluations (eval() calls and
/// guard evaluator calls).
class CountingProblem final : public MooProblem {
public:
    explicit CountingProblem(std::shared_ptr<const MooProblem> inner) : inner_(std::move(inner)) {}

    std::string name() const override { return inner_->name(); }
    std::size_t dim() const override { return inner_->dim(); }
    std::size_t objectives() const override { return inner_->objectives(); }
    std::vector<double> eval(std::span<const double> x) const override;
    GradientMatrix full_jacobian(std::span<const double> x) const override { return inner_->full_jacobian(x); }
    GradientMatrix sample_gradient(std::span<const double> x, Rng& rng) const override {
        return inner_->sample_gradient(x, rng);
    }
    GradientMatrix sample_mean_gradient(std::span<const double> x, std::size_t n, Rng& rng) const override {
        return inner_->sample_mean_gradient(x, n, rng);
    }
    bool is_stochastic() const override { return inner_->is_stochastic(); }
    std::optional<Box> domain() const override { return inner_->domain(); }
    std::vector<double> initial_point(Rng& rng) const override { return inner_->initial_point(rng); }
    LossEvaluator guard_evaluator(Rng& rng) const override;
    bool guard_is_objective() const override { return inner_->guard_is_objective(); }
    bool has_known_front() const override { return inner_->has_known_front(); }
    double distance_to_front(std::span<const double> x) const override { return inner_->distance_to_front(x); }

    std::size_t evaluations() const noexcept { return count_->load(); }
    void reset() noexcept { count_->store(0); }

private:
    std::shared_ptr<const MooProblem> inner_;
    std::shared_ptr<std::atomic<std::size_t>> count_ = std::make_shared<std::atomic<std::size_t>>(0);
};

/// A problem assembled from plain callables.
struct ProblemDefinition {
    std::size_t dim = 0;
    std::size_t objectives = 0;
    std::function<std::vector<double>(std::span<const double>)> eval;
    std::function<GradientMatrix(std::span<const double>)> jacobian;
    std::optional<Box> box;
};

std::shared_ptr<MooProblem> make_function_problem(std::string name, ProblemDefinition def);

using ProblemFactory = std::function<std::shared_ptr<const MooProblem>(const nlohmann::json& params)>;

/// Name -> problem factory lookup used by experiment configs.
class ProblemRegistry {
public:
    void add(const std::string& name, ProblemFactory factory);
    void add(const std::string& name, std::shared_ptr<const MooProblem> instance);
    void add(const std::string& name, ProblemDefinition definition);

    bool contains(const std::string& name) const { return factories_.contains(name); }
    std::vector<std::string> names() const;
    std::shared_ptr<const MooProblem> make(const std::string& name, const nlohmann::json& params = {}) const;

    /// Registry holding "quadratic_pair" and "toy_mtl".
    static ProblemRegistry with_builtins();

private:
    std::map<std::string, ProblemFactory> factories_;
};

/// Finite-difference Jacobian (central differences with step eps).
GradientMatrix finite_difference_jacobian(const MooProblem& problem, std::span<const double> x, double eps = 1e-6);

}  // namespace gml2o
