#include <cmath>

#include "doctest.h"
#include "gml2o/errors.hpp"
#include "gml2o/problems.hpp"
#include "gml2o/runner.hpp"
#include "gml2o/safeguard.hpp"

using namespace gml2o;

namespace {

// Evaluator returning fixed losses for three labelled points: z = 0, fallback = 1, learned = 2.
LossEvaluator table(std::vector<double> fz, std::vector<double> ff, std::vector<double> fl) {
    return [=](std::span<const double> x) {
        if (x[0] == 0.0) return fz;
        if (x[0] == 1.0) return ff;
        return fl;
    };
}

const std::vector<double> Z = {0.0}, F = {1.0}, L = {2.0};

Ml2oParams zero_head(std::size_t m, std::size_t h) {
    Ml2oParams p = Ml2oParams::random(m, h, 3);
    p.store().mutable_value(Ml2oParams::kLinearWeight) *= 0.0;
    p.store().mutable_value(Ml2oParams::kLinearBias) *= 0.0;
    return p;
}

}  // namespace

TEST_CASE("guard selection rules") {
    auto sel = guard_select(Z, F, L, table({1, 1}, {0.7, 0.9}, {0.5, 0.6}));
    CHECK(sel.decision.fallback_delta == doctest::Approx(-0.1));
    CHECK(sel.decision.learned_delta == doctest::Approx(-0.4));
    CHECK(sel.decision.chosen == GuardChoice::learned);
    CHECK(sel.z_next == L);

    sel = guard_select(Z, F, L, table({1, 1}, {0.8, 0.9}, {0.9, 0.8}));
    CHECK(sel.decision.chosen == GuardChoice::fallback);
    CHECK(sel.z_next == F);

    sel = guard_select(Z, F, L, table({1, 1}, {0.9, 0.9}, {0.2, 1.3}));
    CHECK(sel.decision.chosen == GuardChoice::fallback);

    sel = guard_select(Z, F, L, table({1, 1}, {0.9, 0.9}, {NAN, 0.0}));
    CHECK(sel.decision.chosen == GuardChoice::fallback);

    const LossEvaluator failing = [](std::span<const double>) -> std::vector<double> { throw Error("boom"); };
    CHECK_THROWS_AS(guard_select(Z, F, L, failing), Error);
}

TEST_CASE("zero-head learner follows DSSMG") {
    auto p = make_quadratic_pair(4, 5, 0.0);
    const Ml2oParams params = zero_head(2, 3);
    Rng r0(1);
    const auto x0 = p->initial_point(r0);
    GuardedRunOptions go;
    go.steps = 60;
    go.step = StepSchedule::constant(0.1);
    go.samples = {3, 0.2};
    Rng ra(2), rb(2);
    const GuardedRunResult g = gml2o_run(*p, params, x0, go, ra);
    MethodSpec spec;
    spec.name = "dssmg";
    spec.step = go.step;
    spec.samples = go.samples;
    const MethodRun d = run_method(*p, spec, x0, go.steps, rb);
    for (const auto& dec : g.decisions) CHECK(dec.chosen == GuardChoice::fallback);
    CHECK(g.record.back().x == d.record.back().x);
}

TEST_CASE("zero step keeps z") {
    auto p = make_quadratic_pair(3, 1, 0.2);
    GuardedRunOptions go;
    go.steps = 10;
    go.step = StepSchedule::constant(0.0);
    Rng rng(0);
    const std::vector<double> x0 = {0.3, 0.3, 0.3};
    const GuardedRunResult g = gml2o_run(*p, Ml2oParams::random(2, 3, 1), x0, go, rng);
    for (const auto& dec : g.decisions) {
        CHECK(dec.fallback_delta == 0.0);
        CHECK(dec.learned_delta == 0.0);
        CHECK(dec.chosen == GuardChoice::fallback);
    }
    CHECK(g.record.back().x == x0);
}

TEST_CASE("deterministic guard: bad learner gives MGDA, critical start stays put") {
    const QuadraticPair p({0.0, 0.0}, {1.0, 1.0}, 0.0);
    Ml2oParams wild = Ml2oParams::random(2, 3, 1);
    wild.store().mutable_value(Ml2oParams::kLinearBias)[0] = -50.0;
    const std::vector<double> x0 = {2.0, -1.0};
    const GuardedRunResult g = gml2o_deterministic_run(p, wild, x0, 0.5, 40);
    MethodSpec mgda;
    mgda.name = "mgda";
    mgda.step = StepSchedule::constant(0.5);
    Rng rng(0);
    const MethodRun m = run_method(p, mgda, x0, 40, rng);
    for (const auto& dec : g.decisions) CHECK(dec.chosen == GuardChoice::fallback);
    for (std::size_t k = 0; k < m.record.steps(); ++k) CHECK(g.record[k].x == m.record[k].x);

    const std::vector<double> mid = {0.5, 0.5};
    const GuardedRunResult still = gml2o_deterministic_run(p, Ml2oParams::random(2, 3, 2), mid, 0.5, 30);
    for (const RunRow& row : still.record.rows()) CHECK(row.x == mid);
}

TEST_CASE("guard invariant and determinism on stochastic runs") {
    auto p = make_quadratic_pair(6, 2, 0.4);
    const Ml2oParams params = Ml2oParams::random(2, 4, 9, 0.5);
    GuardedRunOptions go;
    go.steps = 200;
    go.step = StepSchedule::constant(0.2);
    go.samples = {2, 0.1};
    const std::vector<double> x0(6, 1.0);
    Rng a(5), b(5);
    const GuardedRunResult r1 = gml2o_run(*p, params, x0, go, a);
    const GuardedRunResult r2 = gml2o_run(*p, params, x0, go, b);
    CHECK(r1.invariant_violations == 0);
    REQUIRE(r1.decisions.size() == r2.decisions.size());
    for (std::size_t k = 0; k < r1.decisions.size(); ++k) CHECK(r1.decisions[k].chosen == r2.decisions[k].chosen);
    for (std::size_t k = 1; k < r1.record.steps(); ++k) {
        const auto& prev = r1.record[k - 1].losses;
        const auto& cur = r1.record[k].losses;
        const double delta = std::max(cur[0] - prev[0], cur[1] - prev[1]);
        CHECK(delta <= r1.decisions[k - 1].fallback_delta);
    }

    auto mtl = make_toy_mtl(1, 256, 4, 16);
    Rng c(1);
    go.steps = 30;
    const GuardedRunResult r3 = gml2o_run(*mtl, Ml2oParams::random(2, 4, 9, 0.5), mtl->initial_point(c), go, c);
    CHECK(r3.invariant_violations == 0);
}

TEST_CASE("guard costs one extra evaluation per step") {
    auto counted = std::make_shared<CountingProblem>(make_quadratic_pair(4, 7, 0.2));
    const std::vector<double> x0(4, 0.5);
    const std::size_t steps = 50;
    MethodSpec spec;
    spec.name = "dssmg";
    spec.step = StepSchedule::constant(0.1);
    Rng ra(3);
    run_method(*counted, spec, x0, steps, ra);
    const std::size_t plain = counted->evaluations();
    counted->reset();
    spec.name = "gml2o";
    spec.ml2o = std::make_shared<const Ml2oParams>(Ml2oParams::random(2, 3, 1));
    Rng rb(3);
    run_method(*counted, spec, x0, steps, rb);
    CHECK(counted->evaluations() == plain + steps);
}
