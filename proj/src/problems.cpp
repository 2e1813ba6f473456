#include "gml2o/problems.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <type_traits>
#include <numeric>

#include "gml2o/errors.hpp"
#include "gml2o/tensor.hpp"

namespace gml2o {

// MooProblem defaults

GradientMatrix MooProblem::sample_gradient(std::span<const double> x, Rng&) const { return full_jacobian(x); }

GradientMatrix MooProblem::sample_mean_gradient(std::span<const double> x, std::size_t n, Rng& rng) const {
    if (n == 0) throw Error("sample_mean_gradient: n must be >= 1");
    if (!is_stochastic()) return sample_gradient(x, rng);
    GradientMatrix acc = sample_gradient(x, rng);
    for (std::size_t j = 1; j < n; ++j) acc += sample_gradient(x, rng);
    if (n > 1) acc *= 1.0 / static_cast<double>(n);
    return acc;
}

std::vector<double> MooProblem::initial_point(Rng& rng) const {
    const auto box = domain();
    if (!box) throw UnsupportedError(name() + ": no box domain to draw an initial point from");
    std::vector<double> x(dim());
    for (std::size_t j = 0; j < x.size(); ++j) {
        std::uniform_real_distribution<double> u(box->lower[j], box->upper[j]);
        x[j] = u(rng);
    }
    return x;
}

LossEvaluator MooProblem::guard_evaluator(Rng&) const {
    return [this](std::span<const double> x) { return eval(x); };
}

double MooProblem::distance_to_front(std::span<const double>) const {
    throw UnsupportedError(name() + ": Pareto set is not known analytically");
}

// QuadraticPair

QuadraticPair::QuadraticPair(std::vector<double> c1, std::vector<double> c2, double noise_sigma)
    : c1_(std::move(c1)), c2_(std::move(c2)), identity_(true), noise_sigma_(noise_sigma) {
    if (c1_.empty() || c1_.size() != c2_.size()) throw ShapeError("quadratic pair: centers must share a positive length");
    if (!(noise_sigma_ >= 0.0)) throw Error("quadratic pair: noise_sigma must be >= 0");
}

QuadraticPair::QuadraticPair(std::vector<double> c1, std::vector<double> c2, std::vector<double> a1,
                             std::vector<double> a2, double noise_sigma)
    : QuadraticPair(std::move(c1), std::move(c2), noise_sigma) {
    const std::size_t n = c1_.size();
    if (a1.size() != n * n || a2.size() != n * n) throw ShapeError("quadratic pair: curvature must be N x N");
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            if (a1[i * n + j] != a1[j * n + i] || a2[i * n + j] != a2[j * n + i]) {
                throw Error("quadratic pair: curvature matrices must be symmetric");
            }
        }
    }
    a1_ = std::move(a1);
    a2_ = std::move(a2);
    identity_ = false;
}

double QuadraticPair::quad(std::span<const double> x, const std::vector<double>& c,
                           const std::vector<double>& a) const {
    const std::size_t n = c.size();
    if (x.size() != n) throw ShapeError("quadratic pair: expected x of length " + std::to_string(n));
    double s = 0.0;
    if (identity_) {
        for (std::size_t j = 0; j < n; ++j) {
            const double d = x[j] - c[j];
            s += d * d;
        }
    } else {
        for (std::size_t i = 0; i < n; ++i) {
            double row = 0.0;
            for (std::size_t j = 0; j < n; ++j) row += a[i * n + j] * (x[j] - c[j]);
            s += (x[i] - c[i]) * row;
        }
    }
    return 0.5 * s;
}

void QuadraticPair::grad_into(std::span<const double> x, const std::vector<double>& c,
                              const std::vector<double>& a, std::span<double> out) const {
    const std::size_t n = c.size();
    if (x.size() != n) throw ShapeError("quadratic pair: expected x of length " + std::to_string(n));
    if (identity_) {
        for (std::size_t j = 0; j < n; ++j) out[j] = x[j] - c[j];
        return;
    }
    for (std::size_t i = 0; i < n; ++i) {
        double row = 0.0;
        for (std::size_t j = 0; j < n; ++j) row += a[i * n + j] * (x[j] - c[j]);
        out[i] = row;
    }
}

std::vector<double> QuadraticPair::eval(std::span<const double> x) const {
    return {quad(x, c1_, a1_), quad(x, c2_, a2_)};
}

GradientMatrix QuadraticPair::full_jacobian(std::span<const double> x) const {
    GradientMatrix j(2, dim());
    grad_into(x, c1_, a1_, j.row(0));
    grad_into(x, c2_, a2_, j.row(1));
    return j;
}

GradientMatrix QuadraticPair::sample_gradient(std::span<const double> x, Rng& rng) const {
    GradientMatrix j = full_jacobian(x);
    if (noise_sigma_ > 0.0) {
        std::normal_distribution<double> noise(0.0, noise_sigma_);
        for (double& v : j.data()) v += noise(rng);
    }
    return j;
}

std::optional<Box> QuadraticPair::domain() const {
    return Box{std::vector<double>(dim(), -2.0), std::vector<double>(dim(), 2.0)};
}

double QuadraticPair::distance_to_front(std::span<const double> x) const {
    if (!identity_) return MooProblem::distance_to_front(x);
    const std::size_t n = dim();
    if (x.size() != n) throw ShapeError("quadratic pair: expected x of length " + std::to_string(n));
    double seg2 = 0.0;
    double proj = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
        const double s = c2_[j] - c1_[j];
        seg2 += s * s;
        proj += (x[j] - c1_[j]) * s;
    }
    const double t = seg2 > 0.0 ? std::clamp(proj / seg2, 0.0, 1.0) : 0.0;
    double d2 = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
        const double p = c1_[j] + t * (c2_[j] - c1_[j]);
        d2 += (x[j] - p) * (x[j] - p);
    }
    return std::sqrt(d2);
}

double QuadraticPair::lipschitz() const {
    if (identity_) return 1.0;
    const std::size_t n = dim();
    auto top_eigen = [n](const std::vector<double>& a) {
        std::vector<double> v(n, 1.0 / std::sqrt(static_cast<double>(n)));
        double lambda = 0.0;
        for (int it = 0; it < 5000; ++it) {
            std::vector<double> w(n, 0.0);
            for (std::size_t i = 0; i < n; ++i) {
                for (std::size_t j = 0; j < n; ++j) w[i] += a[i * n + j] * v[j];
            }
            const double nw = norm(w);
            if (nw == 0.0) return 0.0;
            const double next = dot(v, w);
            for (std::size_t i = 0; i < n; ++i) v[i] = w[i] / nw;
            if (it > 10 && std::abs(next - lambda) <= 1e-14 * std::abs(next)) return next;
            lambda = next;
        }
        return lambda;
    };
    return std::max(top_eigen(a1_), top_eigen(a2_));
}

std::shared_ptr<QuadraticPair> make_quadratic_pair(std::size_t n, std::uint64_t seed, double noise_sigma) {
    if (n < 1) throw Error("make_quadratic_pair: N must be >= 1");
    Rng rng = make_rng(seed, 0, "quadratic-pair-centers");
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::vector<double> c1(n), c2(n);
    for (double& v : c1) v = u(rng);
    for (double& v : c2) v = u(rng);
    return std::make_shared<QuadraticPair>(std::move(c1), std::move(c2), noise_sigma);
}

// Toy MTL

MtlDataset make_mtl_dataset(std::uint64_t seed, std::size_t samples, std::size_t classes, std::size_t input_dim) {
    if (classes < 2) throw Error("toy MTL: classes must be >= 2");
    if (samples < 1) throw Error("toy MTL: samples must be >= 1");
    Rng rng = make_rng(seed, 0, "toy-mtl-dataset");
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::uniform_int_distribution<int> label(0, static_cast<int>(classes) - 1);

    std::vector<double> means1(classes * input_dim), means2(classes * input_dim);
    for (double& v : means1) v = gauss(rng);
    for (double& v : means2) v = gauss(rng);

    MtlDataset d;
    d.input_dim = input_dim;
    d.classes = classes;
    d.inputs.resize(samples * input_dim);
    d.labels1.resize(samples);
    d.labels2.resize(samples);
    constexpr double kNoise = 0.5;
    for (std::size_t s = 0; s < samples; ++s) {
        const int a = label(rng);
        const int b = label(rng);
        d.labels1[s] = a;
        d.labels2[s] = b;
        for (std::size_t j = 0; j < input_dim; ++j) {
            d.inputs[s * input_dim + j] = means1[static_cast<std::size_t>(a) * input_dim + j] +
                                          means2[static_cast<std::size_t>(b) * input_dim + j] + kNoise * gauss(rng);
        }
    }
    return d;
}

ToyMtlProblem::ToyMtlProblem(MtlDataset data, std::size_t hidden, std::size_t batch, std::size_t guard_batch)
    : data_(std::move(data)), hidden_(hidden), batch_(batch), guard_batch_(guard_batch) {
    if (data_.labels2.size() != data_.samples() || data_.inputs.size() != data_.samples() * data_.input_dim) {
        throw ShapeError("toy MTL: dataset arrays are inconsistent");
    }
    if (data_.classes < 2) throw Error("toy MTL: classes must be >= 2");
    if (hidden_ < 1) throw Error("toy MTL: hidden width must be >= 1");
    if (batch_ < 1 || batch_ > data_.samples()) {
        throw Error("toy MTL: batch " + std::to_string(batch_) + " must lie in [1, samples=" +
                    std::to_string(data_.samples()) + "]");
    }
    guard_batch_ = std::clamp<std::size_t>(guard_batch_, 1, data_.samples());
    all_.resize(data_.samples());
    std::iota(all_.begin(), all_.end(), std::size_t{0});
}

std::size_t ToyMtlProblem::dim() const {
    const std::size_t h = hidden_, d = data_.input_dim, c = data_.classes;
    return h * d + h + 2 * (c * h + c);
}

namespace {

struct MtlLayout {
    std::size_t w1, b1, v1, c1, v2, c2;
};

MtlLayout mtl_layout(std::size_t h, std::size_t d, std::size_t c) {
    MtlLayout l{};
    l.w1 = 0;
    l.b1 = h * d;
    l.v1 = l.b1 + h;
    l.c1 = l.v1 + c * h;
    l.v2 = l.c1 + c;
    l.c2 = l.v2 + c * h;
    return l;
}

/// Mean cross-entropy over idx and, optionally, its gradient (one row per task).
void mtl_forward_backward(const MtlDataset& data, std::size_t hidden, std::span<const double> x,
                          std::span<const std::size_t> idx, std::vector<double>& losses, GradientMatrix* jac) {
    const std::size_t h = hidden, d = data.input_dim, c = data.classes;
    const MtlLayout l = mtl_layout(h, d, c);
    const double inv_b = 1.0 / static_cast<double>(idx.size());
    losses.assign(2, 0.0);
    std::vector<double> act(h), logits(c), dh(h);
    for (std::size_t s : idx) {
        const double* in = data.inputs.data() + s * d;
        for (std::size_t u = 0; u < h; ++u) {
            double z = x[l.b1 + u];
            const double* w = x.data() + l.w1 + u * d;
            for (std::size_t j = 0; j < d; ++j) z += w[j] * in[j];
            act[u] = std::tanh(z);
        }
        for (std::size_t task = 0; task < 2; ++task) {
            const std::size_t v_off = task == 0 ? l.v1 : l.v2;
            const std::size_t c_off = task == 0 ? l.c1 : l.c2;
            const int y = task == 0 ? data.labels1[s] : data.labels2[s];
            double mx = -std::numeric_limits<double>::infinity();
            for (std::size_t k = 0; k < c; ++k) {
                double z = x[c_off + k];
                const double* v = x.data() + v_off + k * h;
                for (std::size_t u = 0; u < h; ++u) z += v[u] * act[u];
                logits[k] = z;
                mx = std::max(mx, z);
            }
            double se = 0.0;
            for (std::size_t k = 0; k < c; ++k) se += std::exp(logits[k] - mx);
            const double lse = mx + std::log(se);
            losses[task] += (lse - logits[static_cast<std::size_t>(y)]) * inv_b;
            if (!jac) continue;

            auto g = jac->row(task);
            std::fill(dh.begin(), dh.end(), 0.0);
            for (std::size_t k = 0; k < c; ++k) {
                double delta = std::exp(logits[k] - lse);
                if (k == static_cast<std::size_t>(y)) delta -= 1.0;
                delta *= inv_b;
                g[c_off + k] += delta;
                double* gv = g.data() + v_off + k * h;
                const double* v = x.data() + v_off + k * h;
                for (std::size_t u = 0; u < h; ++u) {
                    gv[u] += delta * act[u];
                    dh[u] += delta * v[u];
                }
            }
            for (std::size_t u = 0; u < h; ++u) {
                const double dpre = dh[u] * (1.0 - act[u] * act[u]);
                g[l.b1 + u] += dpre;
                double* gw = g.data() + l.w1 + u * d;
                for (std::size_t j = 0; j < d; ++j) gw[j] += dpre * in[j];
            }
        }
    }
}

}  // namespace

std::vector<double> ToyMtlProblem::eval_batch(std::span<const double> x, std::span<const std::size_t> idx) const {
    if (x.size() != dim()) throw ShapeError("toy MTL: expected x of length " + std::to_string(dim()));
    std::vector<double> losses;
    mtl_forward_backward(data_, hidden_, x, idx, losses, nullptr);
    return losses;
}

GradientMatrix ToyMtlProblem::jacobian_batch(std::span<const double> x, std::span<const std::size_t> idx) const {
    if (x.size() != dim()) throw ShapeError("toy MTL: expected x of length " + std::to_string(dim()));
    GradientMatrix jac(2, dim());
    std::vector<double> losses;
    mtl_forward_backward(data_, hidden_, x, idx, losses, &jac);
    return jac;
}

std::vector<double> ToyMtlProblem::eval(std::span<const double> x) const { return eval_batch(x, all_); }

GradientMatrix ToyMtlProblem::full_jacobian(std::span<const double> x) const { return jacobian_batch(x, all_); }

std::vector<std::size_t> ToyMtlProblem::draw_batch(std::size_t n, Rng& rng) const {
    n = std::min(n, data_.samples());
    if (n == data_.samples()) return all_;
    // Partial Fisher-Yates over a copy of the index set.
    std::vector<std::size_t> pool = all_;
    for (std::size_t i = 0; i < n; ++i) {
        std::uniform_int_distribution<std::size_t> pick(i, pool.size() - 1);
        std::swap(pool[i], pool[pick(rng)]);
    }
    pool.resize(n);
    return pool;
}

GradientMatrix ToyMtlProblem::sample_gradient(std::span<const double> x, Rng& rng) const {
    if (batch_ == data_.samples()) return full_jacobian(x);
    return jacobian_batch(x, draw_batch(batch_, rng));
}

GradientMatrix ToyMtlProblem::sample_mean_gradient(std::span<const double> x, std::size_t n, Rng& rng) const {
    if (n == 0) throw Error("sample_mean_gradient: n must be >= 1");
    if (n >= data_.samples()) return full_jacobian(x);
    return jacobian_batch(x, draw_batch(n, rng));
}

std::vector<double> ToyMtlProblem::initial_point(Rng& rng) const {
    const std::size_t h = hidden_, d = data_.input_dim, c = data_.classes;
    const MtlLayout l = mtl_layout(h, d, c);
    std::vector<double> x(dim(), 0.0);
    std::normal_distribution<double> enc(0.0, 1.0 / std::sqrt(static_cast<double>(d)));
    std::normal_distribution<double> head(0.0, 0.01);
    for (std::size_t i = l.w1; i < l.b1; ++i) x[i] = enc(rng);
    for (std::size_t i = l.v1; i < l.c1; ++i) x[i] = head(rng);
    for (std::size_t i = l.v2; i < l.c2; ++i) x[i] = head(rng);
    return x;
}

LossEvaluator ToyMtlProblem::guard_evaluator(Rng& rng) const {
    std::vector<std::size_t> idx = draw_batch(guard_batch_, rng);
    return [this, idx = std::move(idx)](std::span<const double> x) { return eval_batch(x, idx); };
}

std::shared_ptr<ToyMtlProblem> make_toy_mtl(std::uint64_t seed, std::size_t samples, std::size_t classes,
                                            std::size_t batch) {
    if (batch > samples) {
        throw Error("toy MTL: batch " + std::to_string(batch) + " exceeds samples " + std::to_string(samples));
    }
    return std::make_shared<ToyMtlProblem>(make_mtl_dataset(seed, samples, classes), 50, batch);
}

// CountingProblem

std::vector<double> CountingProblem::eval(std::span<const double> x) const {
    count_->fetch_add(1);
    return inner_->eval(x);
}

LossEvaluator CountingProblem::guard_evaluator(Rng& rng) const {
    LossEvaluator inner = inner_->guard_evaluator(rng);
    return [inner = std::move(inner), count = count_](std::span<const double> x) {
        count->fetch_add(1);
        return inner(x);
    };
}

// Function-defined problems and the registry

namespace {

class FunctionProblem final : public MooProblem {
public:
    FunctionProblem(std::string name, ProblemDefinition def) : name_(std::move(name)), def_(std::move(def)) {}

    std::string name() const override { return name_; }
    std::size_t dim() const override { return def_.dim; }
    std::size_t objectives() const override { return def_.objectives; }
    std::vector<double> eval(std::span<const double> x) const override { return def_.eval(x); }
    GradientMatrix full_jacobian(std::span<const double> x) const override { return def_.jacobian(x); }
    std::optional<Box> domain() const override { return def_.box; }

private:
    std::string name_;
    ProblemDefinition def_;
};

template <typename T>
T param_or(const nlohmann::json& params, const char* key, T fallback) {
    if (!params.is_object() || !params.contains(key)) return fallback;
    const auto& v = params.at(key);
    const bool ok = std::is_floating_point_v<T> ? v.is_number() : (v.is_number_unsigned() || (v.is_number_integer() && v.get<std::int64_t>() >= 0));
    if (!ok) {
        throw ConfigError({std::string("problem.params.") + key +
                           (std::is_floating_point_v<T> ? ": must be a number" : ": must be a non-negative integer")});
    }
    return v.get<T>();
}

void reject_unknown(const std::string& problem, const nlohmann::json& params,
                    std::initializer_list<const char*> known) {
    if (params.is_null()) return;
    if (!params.is_object()) throw ConfigError({"problem.params for '" + problem + "' must be an object"});
    std::vector<std::string> bad;
    for (const auto& [key, value] : params.items()) {
        const bool ok = std::any_of(known.begin(), known.end(), [&](const char* k) { return key == k; });
        if (!ok) bad.push_back("problem.params." + key + ": unknown field for '" + problem + "'");
    }
    if (!bad.empty()) throw ConfigError(std::move(bad));
}

}  // namespace

std::shared_ptr<MooProblem> make_function_problem(std::string name, ProblemDefinition def) {
    if (!def.eval || !def.jacobian) throw Error("problem definition '" + name + "' needs eval and jacobian");
    if (def.dim < 1 || def.objectives < 1) throw Error("problem definition '" + name + "' has empty dimensions");
    return std::make_shared<FunctionProblem>(std::move(name), std::move(def));
}

void ProblemRegistry::add(const std::string& name, ProblemFactory factory) {
    if (factories_.contains(name)) throw DuplicateError("problem '" + name + "' is already registered");
    factories_.emplace(name, std::move(factory));
}

void ProblemRegistry::add(const std::string& name, std::shared_ptr<const MooProblem> instance) {
    add(name, ProblemFactory([instance](const nlohmann::json&) { return instance; }));
}

void ProblemRegistry::add(const std::string& name, ProblemDefinition definition) {
    add(name, std::shared_ptr<const MooProblem>(make_function_problem(name, std::move(definition))));
}

std::vector<std::string> ProblemRegistry::names() const {
    std::vector<std::string> out;
    for (const auto& [name, f] : factories_) out.push_back(name);
    return out;
}

std::shared_ptr<const MooProblem> ProblemRegistry::make(const std::string& name, const nlohmann::json& params) const {
    auto it = factories_.find(name);
    if (it == factories_.end()) throw NotFoundError("unknown problem '" + name + "'");
    return it->second(params);
}

ProblemRegistry ProblemRegistry::with_builtins() {
    ProblemRegistry reg;
    reg.add("quadratic_pair", ProblemFactory([](const nlohmann::json& p) -> std::shared_ptr<const MooProblem> {
        reject_unknown("quadratic_pair", p, {"dim", "seed", "noise_sigma"});
        return make_quadratic_pair(param_or<std::size_t>(p, "dim", 8), param_or<std::uint64_t>(p, "seed", 0),
                                   param_or<double>(p, "noise_sigma", 0.0));
    }));
    reg.add("toy_mtl", ProblemFactory([](const nlohmann::json& p) -> std::shared_ptr<const MooProblem> {
        reject_unknown("toy_mtl", p, {"seed", "samples", "classes", "batch", "hidden", "guard_batch", "input_dim"});
        const auto samples = param_or<std::size_t>(p, "samples", 2048);
        const auto batch = param_or<std::size_t>(p, "batch", 32);
        if (batch > samples) {
            throw ConfigError({"problem.params.batch: " + std::to_string(batch) + " exceeds samples " +
                               std::to_string(samples)});
        }
        return std::make_shared<ToyMtlProblem>(
            make_mtl_dataset(param_or<std::uint64_t>(p, "seed", 0), samples, param_or<std::size_t>(p, "classes", 10),
                             param_or<std::size_t>(p, "input_dim", 16)),
            param_or<std::size_t>(p, "hidden", 50), batch, param_or<std::size_t>(p, "guard_batch", 256));
    }));
    return reg;
}

GradientMatrix finite_difference_jacobian(const MooProblem& problem, std::span<const double> x, double eps) {
    std::vector<double> work(x.begin(), x.end());
    GradientMatrix j(problem.objectives(), x.size());
    for (std::size_t k = 0; k < x.size(); ++k) {
        const double orig = work[k];
        work[k] = orig + eps;
        const auto up = problem.eval(work);
        work[k] = orig - eps;
        const auto down = problem.eval(work);
        work[k] = orig;
        for (std::size_t i = 0; i < j.rows(); ++i) j.at(i, k) = (up[i] - down[i]) / (2.0 * eps);
    }
    return j;
}

}  // namespace gml2o
