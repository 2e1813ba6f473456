#include "gml2o/ml2o.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "gml2o/errors.hpp"
#include "gml2o/problems.hpp"
#include "json.hpp"

namespace gml2o {

Tensor preprocess_gradient(std::span<const double> g, double p) {
    if (!(p > 0.0)) throw Error("preprocess_gradient: p must be positive");
    const double threshold = std::exp(-p);
    const double amplify = std::exp(p);
    Tensor out = Tensor::zeros({g.size(), kPreprocessChannels});
    for (std::size_t j = 0; j < g.size(); ++j) {
        const double a = std::abs(g[j]);
        if (a >= threshold) {
            out.at(j, 0) = std::log(a) / p;
            out.at(j, 1) = g[j] > 0.0 ? 1.0 : -1.0;
        } else {
            out.at(j, 0) = -1.0;
            out.at(j, 1) = amplify * g[j];
        }
    }
    return out;
}

namespace {

struct CellNodes {
    NodeId h, c, i, f, g, o;
};

// pre = s W_in + h W_hh + 1 b_in + 1 b_hh, gates sliced in [i, f, g, o] order.
CellNodes lstm_nodes(Tape& tape, NodeId s, NodeId h, NodeId c, const Ml2oParamNodes::Cell& p, std::size_t hidden) {
    const std::size_t rows = tape.value(s).rows();
    const NodeId ones = tape.constant(Tensor::filled({rows, 1}, 1.0));
    NodeId pre = tape.add(tape.matmul(s, p.w_in), tape.matmul(h, p.w_hh));
    pre = tape.add(pre, tape.matmul(ones, p.b_in));
    pre = tape.add(pre, tape.matmul(ones, p.b_hh));
    const NodeId i = tape.sigmoid(tape.slice(pre, 1, 0, hidden));
    const NodeId f = tape.sigmoid(tape.slice(pre, 1, hidden, 2 * hidden));
    const NodeId g = tape.tanh(tape.slice(pre, 1, 2 * hidden, 3 * hidden));
    const NodeId o = tape.sigmoid(tape.slice(pre, 1, 3 * hidden, 4 * hidden));
    const NodeId c2 = tape.add(tape.mul(f, c), tape.mul(i, g));
    const NodeId h2 = tape.mul(o, tape.tanh(c2));
    return {h2, c2, i, f, g, o};
}

void check_cell(const LstmCellParams& p, std::size_t input, std::size_t hidden, const std::string& what) {
    const auto bad = [&](const Tensor& t, std::size_t r, std::size_t c) {
        return t.rank() != 2 || t.rows() != r || t.cols() != c;
    };
    if (bad(p.w_in, input, 4 * hidden) || bad(p.w_hh, hidden, 4 * hidden) || bad(p.b_in, 1, 4 * hidden) ||
        bad(p.b_hh, 1, 4 * hidden)) {
        throw ShapeError(what + ": cell parameters inconsistent with input " + std::to_string(input) + ", hidden " +
                         std::to_string(hidden));
    }
}

Tensor uniform(std::size_t rows, std::size_t cols, double scale, Rng& rng) {
    std::uniform_real_distribution<double> dist(-scale, scale);
    Tensor t = Tensor::zeros({rows, cols});
    for (double& v : t.data()) v = dist(rng);
    return t;
}

}  // namespace

LstmOutput lstm_cell(const Tensor& s, const Tensor& h, const Tensor& c, const LstmCellParams& params) {
    const std::size_t hidden = params.hidden();
    check_cell(params, params.input(), hidden, "lstm_cell");
    if (s.rank() != 2 || s.cols() != params.input() || h.rank() != 2 || h.cols() != hidden || !h.same_shape(c) ||
        h.rows() != s.rows()) {
        throw ShapeError("lstm_cell: input " + shape_string(s.shape()) + ", h " + shape_string(h.shape()) + ", c " +
                         shape_string(c.shape()) + " do not fit a cell with input " + std::to_string(params.input()) +
                         " and hidden " + std::to_string(hidden));
    }
    Tape tape;
    const Ml2oParamNodes::Cell p{tape.constant(params.w_in), tape.constant(params.w_hh), tape.constant(params.b_in),
                                 tape.constant(params.b_hh)};
    const CellNodes n = lstm_nodes(tape, tape.constant(s), tape.constant(h), tape.constant(c), p, hidden);
    return {tape.value(n.h), tape.value(n.c), tape.value(n.i), tape.value(n.f), tape.value(n.g), tape.value(n.o)};
}

Ml2oParams::Ml2oParams(std::size_t objectives, std::size_t hidden) : objectives_(objectives), hidden_(hidden) {
    if (objectives < 1 || hidden < 1) throw ShapeError("Ml2oParams: objectives and hidden width must be positive");
    const auto add_cell = [this](const std::string& prefix, std::size_t input, std::size_t h) {
        store_.add(prefix + "w_in", Tensor::zeros({input, 4 * h}));
        store_.add(prefix + "w_hh", Tensor::zeros({h, 4 * h}));
        store_.add(prefix + "b_in", Tensor::zeros({1, 4 * h}));
        store_.add(prefix + "b_hh", Tensor::zeros({1, 4 * h}));
    };
    for (std::size_t i = 0; i < objectives; ++i) add_cell(specific_prefix(i), kPreprocessChannels, hidden);
    add_cell(kSharedPrefix, shared_hidden(), shared_hidden());
    store_.add(kLinearWeight, Tensor::zeros({shared_hidden(), 1}));
    store_.add(kLinearBias, Tensor::zeros({1, 1}));
}

Ml2oParams Ml2oParams::random(std::size_t objectives, std::size_t hidden, std::uint64_t seed, double scale) {
    Ml2oParams params(objectives, hidden);
    Rng rng = make_rng(seed, 0, "ml2o-init");
    // fill in name order
    for (const std::string& name : params.store_.names()) {
        Tensor& t = params.store_.mutable_value(name);
        t = uniform(t.rows(), t.cols(), scale, rng);
    }
    return params;
}

LstmCellParams Ml2oParams::cell(const std::string& prefix) const {
    return {store_.value(prefix + "w_in"), store_.value(prefix + "w_hh"), store_.value(prefix + "b_in"),
            store_.value(prefix + "b_hh")};
}

LstmCellParams Ml2oParams::specific(std::size_t i) const {
    if (i >= objectives_) throw ShapeError("Ml2oParams: no specific module " + std::to_string(i));
    return cell(specific_prefix(i));
}

LstmCellParams Ml2oParams::shared() const { return cell(kSharedPrefix); }

void Ml2oParams::require_objectives(std::size_t m) const {
    if (m != objectives_) {
        throw ShapeError("learned optimizer was built for " + std::to_string(objectives_) +
                         " objectives, problem has " + std::to_string(m));
    }
}

Ml2oState Ml2oState::zeros(std::size_t coordinates, std::size_t objectives, std::size_t hidden) {
    Ml2oState s;
    s.h.assign(objectives, Tensor::zeros({coordinates, hidden}));
    s.c.assign(objectives, Tensor::zeros({coordinates, hidden}));
    s.h_shared = Tensor::zeros({coordinates, objectives * hidden});
    s.c_shared = s.h_shared;
    return s;
}

bool Ml2oState::all_finite() const {
    for (const auto& t : h) {
        if (!t.all_finite()) return false;
    }
    for (const auto& t : c) {
        if (!t.all_finite()) return false;
    }
    return h_shared.all_finite() && c_shared.all_finite();
}

Ml2oParamNodes bind_params(Tape& tape, const Ml2oParams& params) {
    const auto bind = [&](const std::string& prefix) {
        const ParamStore& s = params.store();
        return Ml2oParamNodes::Cell{tape.parameter(s, prefix + "w_in"), tape.parameter(s, prefix + "w_hh"),
                                    tape.parameter(s, prefix + "b_in"), tape.parameter(s, prefix + "b_hh")};
    };
    Ml2oParamNodes nodes;
    for (std::size_t i = 0; i < params.objectives(); ++i) nodes.specific.push_back(bind(Ml2oParams::specific_prefix(i)));
    nodes.shared = bind(Ml2oParams::kSharedPrefix);
    nodes.linear_w = tape.parameter(params.store(), Ml2oParams::kLinearWeight);
    nodes.linear_b = tape.parameter(params.store(), Ml2oParams::kLinearBias);
    return nodes;
}

Ml2oStateNodes bind_state(Tape& tape, const Ml2oState& state) {
    Ml2oStateNodes nodes;
    for (const auto& t : state.h) nodes.h.push_back(tape.constant(t));
    for (const auto& t : state.c) nodes.c.push_back(tape.constant(t));
    nodes.h_shared = tape.constant(state.h_shared);
    nodes.c_shared = tape.constant(state.c_shared);
    return nodes;
}

Ml2oState read_state(const Tape& tape, const Ml2oStateNodes& nodes) {
    Ml2oState s;
    for (NodeId id : nodes.h) s.h.push_back(tape.value(id));
    for (NodeId id : nodes.c) s.c.push_back(tape.value(id));
    s.h_shared = tape.value(nodes.h_shared);
    s.c_shared = tape.value(nodes.c_shared);
    return s;
}

NodeId ml2o_forward(Tape& tape, const Ml2oParamNodes& params, const GradientMatrix& y, Ml2oStateNodes& state,
                    double p) {
    const std::size_t m = params.specific.size();
    const std::size_t n = y.cols();
    if (y.rows() != m || state.h.size() != m || state.c.size() != m) {
        throw ShapeError("ml2o: gradient matrix has " + std::to_string(y.rows()) + " rows, optimizer expects " +
                         std::to_string(m));
    }
    const std::size_t hidden = tape.value(params.specific[0].w_hh).rows();
    if (tape.value(state.h_shared).rows() != n) {
        throw ShapeError("ml2o: recurrent state covers " + std::to_string(tape.value(state.h_shared).rows()) +
                         " coordinates, gradients have " + std::to_string(n));
    }
    std::vector<NodeId> hs;
    hs.reserve(m);
    for (std::size_t i = 0; i < m; ++i) {
        const NodeId s = tape.constant(preprocess_gradient(y.row(i), p));
        const CellNodes out = lstm_nodes(tape, s, state.h[i], state.c[i], params.specific[i], hidden);
        state.h[i] = out.h;
        state.c[i] = out.c;
        hs.push_back(out.h);
    }
    const NodeId shared_in = tape.concat(hs, 1);
    const CellNodes sh = lstm_nodes(tape, shared_in, state.h_shared, state.c_shared, params.shared, m * hidden);
    state.h_shared = sh.h;
    state.c_shared = sh.c;
    const NodeId ones = tape.constant(Tensor::filled({n, 1}, 1.0));
    return tape.add(tape.matmul(sh.h, params.linear_w), tape.matmul(ones, params.linear_b));
}

namespace {

void check_state(const Ml2oState& state, const Ml2oParams& params, std::size_t n) {
    const std::size_t m = params.objectives();
    const std::size_t h = params.hidden();
    bool ok = state.h.size() == m && state.c.size() == m;
    for (std::size_t i = 0; ok && i < m; ++i) {
        ok = state.h[i].rank() == 2 && state.h[i].rows() == n && state.h[i].cols() == h && state.c[i].same_shape(state.h[i]);
    }
    ok = ok && state.h_shared.rank() == 2 && state.h_shared.rows() == n && state.h_shared.cols() == m * h &&
         state.c_shared.same_shape(state.h_shared);
    if (!ok) throw ShapeError("ml2o: recurrent state does not match the optimizer widths or " + std::to_string(n) +
                              " coordinates");
}

}  // namespace

Ml2oOutput ml2o_direction(const GradientMatrix& y, const Ml2oState& state, const Ml2oParams& params, double p) {
    params.require_objectives(y.rows());
    check_state(state, params, y.cols());
    Tape tape;
    const Ml2oParamNodes pn = bind_params(tape, params);
    Ml2oStateNodes sn = bind_state(tape, state);
    const NodeId g = ml2o_forward(tape, pn, y, sn, p);
    return {tape.value(g).values(), read_state(tape, sn)};
}

double meta_loss(std::span<const double> f_curr, std::span<const double> f_prev) {
    if (f_curr.size() != f_prev.size() || f_curr.empty()) {
        throw ShapeError("meta_loss: objective vectors of length " + std::to_string(f_curr.size()) + " and " +
                         std::to_string(f_prev.size()));
    }
    double best = f_curr[0] - f_prev[0];
    for (std::size_t i = 1; i < f_curr.size(); ++i) best = std::max(best, f_curr[i] - f_prev[i]);
    return best;
}

namespace {

GradientMatrix learner_gradients(const MooProblem& problem, std::span<const double> x, Rng& rng, std::size_t samples) {
    if (samples == 0) return problem.sample_gradient(x, rng);
    return problem.sample_mean_gradient(x, samples, rng);
}

}  // namespace

Ml2oStepResult ml2o_step(const MooProblem& problem, std::span<const double> x, Ml2oState& state,
                         const Ml2oParams& params, double alpha, Rng& rng, std::size_t samples) {
    if (x.size() != problem.dim()) throw ShapeError("ml2o_step: iterate dimension mismatch");
    const GradientMatrix y = learner_gradients(problem, x, rng, samples);
    Ml2oOutput out = ml2o_direction(y, state, params);
    state = std::move(out.state);
    Ml2oStepResult r;
    r.x.assign(x.begin(), x.end());
    for (std::size_t j = 0; j < r.x.size(); ++j) r.x[j] -= alpha * out.direction[j];
    r.direction_norm = norm(out.direction);
    return r;
}

namespace {

Tensor column(std::span<const double> v) { return Tensor::matrix(v.size(), 1, {v.begin(), v.end()}); }

// First-order surrogate of f_i around the current value: exact value and
// exact first derivative with respect to the iterate node.
NodeId objective_node(Tape& tape, NodeId x_node, std::span<const double> fx, const GradientMatrix& jac,
                      std::size_t i) {
    const Tensor& xv = tape.value(x_node);
    const NodeId offset = tape.sub(x_node, tape.constant(xv));
    const NodeId lin = tape.sum(tape.mul(tape.constant(column(jac.row(i))), offset));
    return tape.add(tape.constant(Tensor::scalar(fx[i])), lin);
}

void validate_options(const MetaTrainOptions& options) {
    std::vector<std::string> bad;
    if (options.period == 0) bad.push_back("period must be positive");
    if (options.horizon == 0) bad.push_back("horizon must be positive");
    if (options.period != 0 && options.horizon % options.period != 0) {
        bad.push_back("period " + std::to_string(options.period) + " does not divide horizon " +
                      std::to_string(options.horizon));
    }
    if (!(options.meta_lr >= 0.0) || !std::isfinite(options.meta_lr)) bad.push_back("meta_lr must be >= 0");
    if (!bad.empty()) throw ConfigError(std::move(bad));
}

}  // namespace

PeriodResult run_period(const MooProblem& problem, Ml2oParams& params, std::span<const double> x0,
                        const Ml2oState& state0, std::size_t period, std::size_t k0, const MetaTrainOptions& options,
                        Rng& rng, bool accumulate, const std::vector<GradientMatrix>* replay) {
    const std::size_t n = problem.dim();
    const std::size_t m = problem.objectives();
    params.require_objectives(m);
    if (x0.size() != n) throw ShapeError("run_period: iterate dimension mismatch");
    check_state(state0, params, n);
    if (period == 0) throw Error("run_period: period must be positive");
    if (replay && replay->size() != period) throw ShapeError("run_period: replay holds the wrong number of steps");

    Tape tape;
    const Ml2oParamNodes pn = bind_params(tape, params);
    Ml2oStateNodes sn = bind_state(tape, state0);
    NodeId x_node = tape.constant(column(x0));
    std::vector<double> x(x0.begin(), x0.end());
    std::vector<double> f_prev = problem.eval(x);
    GradientMatrix jac_prev = problem.full_jacobian(x);

    PeriodResult result;
    std::vector<NodeId> losses;
    for (std::size_t t = 1; t <= period; ++t) {
        const double alpha = options.step.alpha(k0 + t);
        GradientMatrix y = replay                                     ? (*replay)[t - 1]
                           : options.gradients == GradientMode::exact ? jac_prev
                                                                      : problem.sample_gradient(x, rng);
        const NodeId g = ml2o_forward(tape, pn, y, sn, options.preprocess_p);
        result.inputs.push_back(std::move(y));
        const NodeId x_next = tape.sub(x_node, tape.scale(g, alpha));
        const std::vector<double> xv = tape.value(x_next).values();
        const std::vector<double> f_curr = problem.eval(xv);
        const GradientMatrix jac_curr = problem.full_jacobian(xv);

        std::vector<NodeId> deltas;
        for (std::size_t i = 0; i < m; ++i) {
            deltas.push_back(tape.sub(objective_node(tape, x_next, f_curr, jac_curr, i),
                                      objective_node(tape, x_node, f_prev, jac_prev, i)));
        }
        const NodeId lk = tape.max(deltas);
        if (!std::isfinite(tape.value(lk).item())) {
            std::ostringstream msg;
            msg << "meta-loss became non-finite at step " << (k0 + t) << " (iterate norm " << norm(xv)
                << ", direction norm " << norm(tape.value(g).values()) << ")";
            throw NumericalError(msg.str());
        }
        losses.push_back(lk);
        x_node = x_next;
        x = xv;
        f_prev = f_curr;
        jac_prev = jac_curr;
    }
    NodeId total = losses[0];
    for (std::size_t t = 1; t < losses.size(); ++t) total = tape.add(total, losses[t]);
    const NodeId mean = tape.scale(total, 1.0 / static_cast<double>(period));
    if (accumulate) tape.backward(mean, params.store());

    result.loss = tape.value(mean).item();
    result.x_end = std::move(x);
    result.state_end = read_state(tape, sn);
    return result;
}

MetaTrainResult meta_train(const ProblemSampler& sampler, Ml2oParams params, const MetaTrainOptions& options) {
    validate_options(options);
    MetaTrainResult result{std::move(params), {}};
    Ml2oParams& p = result.params;
    const std::size_t periods = options.horizon / options.period;
    for (std::size_t e = options.first_epoch; e < options.first_epoch + options.epochs; ++e) {
        Rng rng = make_rng(options.seed, e, "meta-train-epoch");
        const TrainingTask task = sampler(e, rng);
        if (!task.problem) throw Error("meta_train: sampler returned no problem");
        const MooProblem& problem = *task.problem;
        p.require_objectives(problem.objectives());
        std::vector<double> x = task.x0;
        Ml2oState state = Ml2oState::zeros(problem.dim(), p.objectives(), p.hidden());
        for (std::size_t t = 0; t < periods; ++t) {
            p.store().zero_grad();
            PeriodResult pr = run_period(problem, p, x, state, options.period, t * options.period, options, rng, true);
            result.trace.push_back({e, t, pr.loss});
            if (options.meta_lr > 0.0) p.store().gradient_step(options.meta_lr);
            if (!p.store().all_finite()) {
                throw NumericalError("meta_train: parameters became non-finite in epoch " + std::to_string(e) +
                                     ", period " + std::to_string(t));
            }
            x = std::move(pr.x_end);
            state = std::move(pr.state_end);
        }
    }
    p.store().zero_grad();
    return result;
}

double evaluate_meta_loss(const MooProblem& problem, const Ml2oParams& params, std::span<const double> x0,
                          std::size_t horizon, const MetaTrainOptions& options, Rng& rng) {
    params.require_objectives(problem.objectives());
    if (horizon == 0) throw Error("evaluate_meta_loss: horizon must be positive");
    std::vector<double> x(x0.begin(), x0.end());
    Ml2oState state = Ml2oState::zeros(problem.dim(), params.objectives(), params.hidden());
    std::vector<double> f_prev = problem.eval(x);
    double total = 0.0;
    for (std::size_t k = 1; k <= horizon; ++k) {
        const GradientMatrix y =
            options.gradients == GradientMode::exact ? problem.full_jacobian(x) : problem.sample_gradient(x, rng);
        Ml2oOutput out = ml2o_direction(y, state, params, options.preprocess_p);
        state = std::move(out.state);
        const double alpha = options.step.alpha(k);
        for (std::size_t j = 0; j < x.size(); ++j) x[j] -= alpha * out.direction[j];
        const std::vector<double> f_curr = problem.eval(x);
        total += meta_loss(f_curr, f_prev);
        f_prev = f_curr;
    }
    return total / static_cast<double>(horizon);
}

void save_checkpoint(const Ml2oParams& params, const std::string& path, const CheckpointInfo& info) {
    nlohmann::json j;
    j["version"] = kCheckpointVersion;
    j["m"] = params.objectives();
    j["hidden"] = params.hidden();
    j["out_width"] = params.out_width();
    j["epochs_completed"] = info.epochs_completed;
    nlohmann::json arrays = nlohmann::json::object();
    for (const auto& [name, t] : params.store().values()) arrays[name] = t.values();
    j["arrays"] = std::move(arrays);

    const std::filesystem::path target(path);
    if (target.has_parent_path()) std::filesystem::create_directories(target.parent_path());
    const std::filesystem::path tmp = target.string() + ".tmp";
    {
        std::ofstream out(tmp);
        if (!out) throw CheckpointError("cannot write checkpoint '" + path + "'");
        out << j.dump(1) << '\n';
        if (!out) throw CheckpointError("failed writing checkpoint '" + path + "'");
    }
    std::filesystem::rename(tmp, target);
}

Ml2oParams load_checkpoint(const std::string& path, CheckpointInfo* info) {
    std::ifstream in(path);
    if (!in) throw CheckpointError("cannot open checkpoint '" + path + "'");
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw CheckpointError("corrupt checkpoint '" + path + "': " + e.what());
    }
    const auto field = [&](const char* name) -> const nlohmann::json& {
        if (!j.is_object() || !j.contains(name)) {
            throw CheckpointError("corrupt checkpoint '" + path + "': missing field '" + name + "'");
        }
        return j.at(name);
    };
    const auto count = [&](const char* name) -> std::size_t {
        const auto& v = field(name);
        if (!(v.is_number_unsigned() || (v.is_number_integer() && v.get<std::int64_t>() >= 0))) {
            throw CheckpointError("corrupt checkpoint '" + path + "': field '" + name + "' is not a count");
        }
        return v.get<std::size_t>();
    };
    const auto& version = field("version");
    if (!version.is_number_integer() || version.get<int>() != kCheckpointVersion) {
        throw CheckpointError("checkpoint '" + path + "': field 'version' is " + version.dump() + ", expected " +
                              std::to_string(kCheckpointVersion));
    }
    const std::size_t m = count("m");
    const std::size_t hidden = count("hidden");
    if (count("out_width") != 1) throw CheckpointError("checkpoint '" + path + "': field 'out_width' must be 1");
    if (m == 0 || hidden == 0) throw CheckpointError("checkpoint '" + path + "': fields 'm' and 'hidden' must be positive");
    const std::size_t epochs = j.contains("epochs_completed") ? count("epochs_completed") : 0;

    Ml2oParams params(m, hidden);
    const auto& arrays = field("arrays");
    if (!arrays.is_object()) throw CheckpointError("corrupt checkpoint '" + path + "': field 'arrays' is not an object");
    for (const std::string& name : params.store().names()) {
        if (!arrays.contains(name)) {
            throw CheckpointError("corrupt checkpoint '" + path + "': missing array '" + name + "'");
        }
        const auto& a = arrays.at(name);
        Tensor& t = params.store().mutable_value(name);
        if (!a.is_array() || a.size() != t.size()) {
            throw CheckpointError("corrupt checkpoint '" + path + "': array '" + name + "' should hold " +
                                  std::to_string(t.size()) + " numbers");
        }
        for (std::size_t i = 0; i < t.size(); ++i) {
            if (!a[i].is_number()) throw CheckpointError("corrupt checkpoint '" + path + "': array '" + name + "'");
            t[i] = a[i].get<double>();
        }
    }
    for (const auto& [name, _] : arrays.items()) {
        if (!params.store().contains(name)) {
            throw CheckpointError("corrupt checkpoint '" + path + "': unexpected array '" + name + "'");
        }
    }
    if (!params.store().all_finite()) throw CheckpointError("checkpoint '" + path + "': non-finite parameter");
    if (info) info->epochs_completed = epochs;
    return params;
}

}  // namespace gml2o
