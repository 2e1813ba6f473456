#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "gml2o/gradient_matrix.hpp"
#include "gml2o/optimizers.hpp"
#include "gml2o/rng.hpp"
#include "gml2o/tape.hpp"
#include "gml2o/tensor.hpp"

namespace gml2o {

class MooProblem;

constexpr double kDefaultPreprocessScale = 10.0;
constexpr std::size_t kPreprocessChannels = 2;

/// Two-channel encoding of every gradient coordinate (N x 2):
///   |g| >= e^-p : (log|g| / p, sign(g))
///   otherwise   : (-1, e^p g)
Tensor preprocess_gradient(std::span<const double> g, double p = kDefaultPreprocessScale);

/// Gate weights of one LSTM cell with input width I and hidden width H.
/// Gate blocks are ordered [input, forget, candidate, output] along the
/// 4H axis; weights are stored input-major so that pre = s W_in + h W_hh.
struct LstmCellParams {
    Tensor w_in;  // I x 4H
    Tensor w_hh;  // H x 4H
    Tensor b_in;  // 1 x 4H
    Tensor b_hh;  // 1 x 4H

    std::size_t hidden() const { return w_hh.rows(); }
    std::size_t input() const { return w_in.rows(); }
};

struct LstmOutput {
    Tensor h;
    Tensor c;
    Tensor input_gate;
    Tensor forget_gate;
    Tensor candidate;
    Tensor output_gate;
};

/// One LSTM step for a batch of rows: s is B x I, h and c are B x H.
LstmOutput lstm_cell(const Tensor& s, const Tensor& h, const Tensor& c, const LstmCellParams& params);

/// Parameters of the learned optimizer: M objective-specific cells of
/// width H, a shared cell of width M*H over the concatenated specific
/// hidden states, and a linear head M*H -> 1.
class Ml2oParams {
public:
    Ml2oParams(std::size_t objectives, std::size_t hidden);

    /// Entries drawn U[-scale, scale] from the given seed.
    static Ml2oParams random(std::size_t objectives, std::size_t hidden, std::uint64_t seed, double scale = 0.1);

    std::size_t objectives() const noexcept { return objectives_; }
    std::size_t hidden() const noexcept { return hidden_; }
    std::size_t shared_hidden() const noexcept { return objectives_ * hidden_; }
    std::size_t out_width() const noexcept { return 1; }

    ParamStore& store() noexcept { return store_; }
    const ParamStore& store() const noexcept { return store_; }

    LstmCellParams specific(std::size_t i) const;
    LstmCellParams shared() const;

    static std::string specific_prefix(std::size_t i) { return "specific." + std::to_string(i) + "."; }
    static constexpr const char* kSharedPrefix = "shared.";
    static constexpr const char* kLinearWeight = "linear.w";
    static constexpr const char* kLinearBias = "linear.b";

    /// Throws ShapeError when the parameters were built for a different
    /// objective count.
    void require_objectives(std::size_t m) const;

    friend bool operator==(const Ml2oParams& a, const Ml2oParams& b) {
        return a.objectives_ == b.objectives_ && a.hidden_ == b.hidden_ && a.store_ == b.store_;
    }

private:
    LstmCellParams cell(const std::string& prefix) const;

    std::size_t objectives_;
    std::size_t hidden_;
    ParamStore store_;
};

/// Recurrent state: one (h, c) pair per objective (N x H each) and the
/// shared pair (N x M*H). Each decision coordinate owns one row.
struct Ml2oState {
    std::vector<Tensor> h;
    std::vector<Tensor> c;
    Tensor h_shared;
    Tensor c_shared;

    static Ml2oState zeros(std::size_t coordinates, std::size_t objectives, std::size_t hidden);
    std::size_t coordinates() const { return h_shared.rows(); }
    bool all_finite() const;

    friend bool operator==(const Ml2oState&, const Ml2oState&) = default;
};

struct Ml2oOutput {
    std::vector<double> direction;  // g_k
    Ml2oState state;                // advanced state
};

/// g_k for gradient rows Y (M x N). The network is applied to every
/// coordinate with shared weights and per-coordinate recurrent state.
Ml2oOutput ml2o_direction(const GradientMatrix& y, const Ml2oState& state, const Ml2oParams& params,
                          double p = kDefaultPreprocessScale);

/// Tape handles of every parameter tensor.
struct Ml2oParamNodes {
    struct Cell {
        NodeId w_in, w_hh, b_in, b_hh;
    };
    std::vector<Cell> specific;
    Cell shared;
    NodeId linear_w, linear_b;
};

struct Ml2oStateNodes {
    std::vector<NodeId> h;
    std::vector<NodeId> c;
    NodeId h_shared, c_shared;
};

Ml2oParamNodes bind_params(Tape& tape, const Ml2oParams& params);
Ml2oStateNodes bind_state(Tape& tape, const Ml2oState& state);
Ml2oState read_state(const Tape& tape, const Ml2oStateNodes& nodes);

/// Records the network on `tape`; returns the N x 1 direction node and
/// advances `state` to the new nodes. Gradients in `y` enter as constants.
NodeId ml2o_forward(Tape& tape, const Ml2oParamNodes& params, const GradientMatrix& y, Ml2oStateNodes& state,
                    double p = kDefaultPreprocessScale);

/// L_k = max_i (f_curr_i - f_prev_i)
double meta_loss(std::span<const double> f_curr, std::span<const double> f_prev);

/// One learned step u_{k+1} = u_k - alpha g_k. Gradients come from
/// sample_mean_gradient(x, samples), or from one sample_gradient draw when
/// samples is 0.
struct Ml2oStepResult {
    std::vector<double> x;
    double direction_norm = 0.0;
};
Ml2oStepResult ml2o_step(const MooProblem& problem, std::span<const double> x, Ml2oState& state,
                         const Ml2oParams& params, double alpha, Rng& rng, std::size_t samples = 0);

/// Learner-gradient source during unrolling.
enum class GradientMode { stochastic, exact };

struct MetaTrainOptions {
    std::size_t horizon = 100;  // K
    std::size_t period = 10;    // truncation window; must divide horizon
    double meta_lr = 0.0005;
    std::size_t epochs = 200;
    std::size_t first_epoch = 0;  // resume offset; epoch e always uses stream (seed, e)
    StepSchedule step = StepSchedule::constant(0.1);
    GradientMode gradients = GradientMode::stochastic;
    double preprocess_p = kDefaultPreprocessScale;
    std::uint64_t seed = 0;
};

/// Problem and initial point for one meta-training epoch.
struct TrainingTask {
    std::shared_ptr<const MooProblem> problem;
    std::vector<double> x0;
};
using ProblemSampler = std::function<TrainingTask(std::size_t epoch, Rng& rng)>;

struct MetaTraceRow {
    std::size_t epoch = 0;
    std::size_t period = 0;
    double loss = 0.0;
};

struct MetaTrainResult {
    Ml2oParams params;
    std::vector<MetaTraceRow> trace;
};

/// Outcome of unrolling one truncation window.
struct PeriodResult {
    double loss = 0.0;  // mean meta-loss over the window
    std::vector<double> x_end;
    Ml2oState state_end;
    /// Learner gradients fed to the network at each unrolled step.
    std::vector<GradientMatrix> inputs;
};

/// Unrolls `period` learned steps from (x0, state0) on a tape, starting at
/// iteration index k0 + 1. When `accumulate` is true the gradient of the
/// mean meta-loss is added to params.store()'s accumulator. With `replay`
/// the learner gradients are taken from it instead of the problem.
PeriodResult run_period(const MooProblem& problem, Ml2oParams& params, std::span<const double> x0,
                        const Ml2oState& state0, std::size_t period, std::size_t k0, const MetaTrainOptions& options,
                        Rng& rng, bool accumulate, const std::vector<GradientMatrix>* replay = nullptr);

/// Truncated BPTT: per epoch, draw a task, unroll horizon / period windows,
/// and after each window apply params -= meta_lr * dLoss/dParams. The
/// recurrent state carries across windows and resets between epochs.
MetaTrainResult meta_train(const ProblemSampler& sampler, Ml2oParams params, const MetaTrainOptions& options);

/// Mean meta-loss of a forward-only run of `horizon` learned steps.
double evaluate_meta_loss(const MooProblem& problem, const Ml2oParams& params, std::span<const double> x0,
                          std::size_t horizon, const MetaTrainOptions& options, Rng& rng);

constexpr int kCheckpointVersion = 1;

struct CheckpointInfo {
    std::size_t epochs_completed = 0;
};

void save_checkpoint(const Ml2oParams& params, const std::string& path, const CheckpointInfo& info = {});
Ml2oParams load_checkpoint(const std::string& path, CheckpointInfo* info = nullptr);

}  // namespace gml2o
