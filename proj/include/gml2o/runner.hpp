#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "gml2o/ml2o.hpp"
#include "gml2o/optimizers.hpp"
#include "gml2o/problems.hpp"
#include "gml2o/record.hpp"

namespace gml2o {

/// Resolved optimizer: method name plus every hyperparameter it may use.
struct MethodSpec {
    std::string name = "mgda";
    StepSchedule step = StepSchedule::constant(0.01);
    SampleSchedule samples;
    MomentumTrackingParams tracking;
    double composite_beta = 0.5;
    ScalarizedParams scalar;
    std::shared_ptr<const Ml2oParams> ml2o;
    /// Learned methods feed averaged gradients of N_k draws when true and a
    /// single draw otherwise.
    bool dynamic_samples = true;
    double preprocess_p = kDefaultPreprocessScale;
};

/// Every method name run_method() accepts.
const std::vector<std::string>& method_names();
bool is_learned_method(const std::string& name);

struct MethodRun {
    RunRecord record;
    std::size_t guard_violations = 0;
};

/// Runs `steps` iterations from x0 and records every iterate.
MethodRun run_method(const MooProblem& problem, const MethodSpec& spec, std::span<const double> x0,
                     std::size_t steps, Rng& rng);

}  // namespace gml2o
