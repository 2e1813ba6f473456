#include "gml2o/checks.hpp"

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <memory>
#include <mutex>
#include <random>
#include <sstream>

#include "gml2o/errors.hpp"
#include "gml2o/harness.hpp"
#include "gml2o/metrics.hpp"
#include "gml2o/minnorm.hpp"
#include "gml2o/ml2o.hpp"
#include "gml2o/optimizers.hpp"
#include "gml2o/parallel.hpp"
#include "gml2o/problems.hpp"
#include "gml2o/runner.hpp"
#include "gml2o/safeguard.hpp"
#include "gml2o/tensor.hpp"

namespace gml2o {

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

std::string fmt(const char* f, double a) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, a);
    return buf;
}

GradientMatrix random_matrix(std::size_t m, std::size_t n, Rng& rng, double scale = 1.0) {
    std::normal_distribution<double> normal(0.0, scale);
    GradientMatrix w(m, n);
    for (double& v : w.data()) v = normal(rng);
    return w;
}

double max_row_norm(const GradientMatrix& w) {
    double best = 0.0;
    for (std::size_t i = 0; i < w.rows(); ++i) best = std::max(best, norm(w.row(i)));
    return best;
}

std::string scratch_dir(const CheckOptions& options, const std::string& name) {
    fs::path base = options.scratch.empty() ? fs::temp_directory_path() / "gml2o-check" : fs::path(options.scratch);
    fs::path dir = base / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir.string();
}

// 1 --------------------------------------------------------------------------

CheckResult minnorm_oracles(const CheckOptions&) {
    CheckResult r;
    Rng rng = make_rng(1, 0, "check-minnorm");
    std::uniform_int_distribution<std::size_t> dims(1, 20);
    double worst2 = 0.0;
    std::size_t fail2 = 0;
    for (int t = 0; t < 1000; ++t) {
        GradientMatrix w = random_matrix(2, dims(rng), rng);
        const MinNormSolution s = solve_min_norm(w);
        const SimplexWeights o = min_norm_2obj_oracle(w.row(0), w.row(1));
        const double diff = std::abs(s.dual_norm_sq - min_norm_objective(w, o.weights));
        worst2 = std::max(worst2, diff);
        if (!(diff <= 1e-6)) ++fail2;
    }
    double worst3 = 0.0;
    std::size_t fail3 = 0;
    const std::size_t res = 500;
    for (int t = 0; t < 200; ++t) {
        GradientMatrix w = random_matrix(3, dims(rng), rng);
        const MinNormSolution s = solve_min_norm(w);
        const double grid = min_norm_objective(w, simplex_grid_oracle(w, res).weights);
        // one grid step moves the combination by at most h
        const double h = 2.0 / static_cast<double>(res) * max_row_norm(w);
        const double slack = 2.0 * std::sqrt(s.dual_norm_sq) * h + h * h;
        const double excess = std::max(s.dual_norm_sq - grid, grid - s.dual_norm_sq - slack);
        worst3 = std::max(worst3, excess);
        if (!(s.dual_norm_sq <= grid + 1e-12) || !(grid - s.dual_norm_sq <= slack)) ++fail3;
    }
    r.passed = fail2 == 0 && fail3 == 0;
    r.detail = "M=2 failures " + std::to_string(fail2) + "/1000 (max diff " + fmt("%.2e", worst2) +
               "), M=3 failures " + std::to_string(fail3) + "/200";
    return r;
}

// 2 --------------------------------------------------------------------------

CheckResult descent_invariant(const CheckOptions&) {
    CheckResult r;
    Rng rng = make_rng(2, 0, "check-descent");
    std::uniform_int_distribution<std::size_t> objs(2, 6), dims(1, 30);
    std::size_t solved = 0, violations = 0;
    for (int t = 0; t < 5000; ++t) {
        const std::size_t m = objs(rng);
        GradientMatrix w = random_matrix(m, dims(rng), rng, t % 2 ? 1.0 : 10.0);
        const double tol = kDefaultMinNormTol;
        const MinNormSolution s = solve_min_norm(w, tol);
        if (!(s.gap <= tol)) continue;
        ++solved;
        const double dd = dot(s.descent_direction, s.descent_direction);
        for (std::size_t i = 0; i < m; ++i) {
            if (!(dot(w.row(i), s.descent_direction) <= -dd + 10.0 * tol)) ++violations;
        }
    }
    r.passed = violations == 0 && solved > 0;
    r.detail = std::to_string(violations) + " violations over " + std::to_string(solved) + " solved instances";
    return r;
}

// 3 --------------------------------------------------------------------------

std::vector<double> exact_direction_2(const GradientMatrix& w) {
    return combine_rows(w, min_norm_2obj_oracle(w.row(0), w.row(1)).weights);
}

CheckResult holder_property(const CheckOptions&) {
    CheckResult r;
    Rng rng = make_rng(3, 0, "check-holder");
    std::uniform_int_distribution<std::size_t> dims(1, 10);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::size_t violations = 0;
    double worst = -1e300;
    for (int t = 0; t < 1000; ++t) {
        const std::size_t n = dims(rng);
        const double c = 0.1 + 10.0 * unit(rng);
        GradientMatrix w = random_matrix(2, n, rng);
        // V close to W half of the time
        GradientMatrix v = t % 2 ? random_matrix(2, n, rng) : w;
        if (t % 2 == 0) {
            GradientMatrix e = random_matrix(2, n, rng, std::pow(10.0, -6.0 * unit(rng)));
            v += e;
        }
        w *= c * unit(rng) / w.norm();
        v *= c * unit(rng) / v.norm();
        const auto dw = exact_direction_2(w);
        const auto dv = exact_direction_2(v);
        std::vector<double> diff(n);
        for (std::size_t j = 0; j < n; ++j) diff[j] = dw[j] - dv[j];
        GradientMatrix wv = v;
        wv *= -1.0;
        wv += w;
        const double lhs = norm(diff);
        const double rhs = std::sqrt(2.0 * c) * std::sqrt(wv.norm()) + 1e-8;
        worst = std::max(worst, lhs - rhs);
        if (!(lhs <= rhs)) ++violations;
    }
    r.passed = violations == 0;
    r.detail = std::to_string(violations) + " violations over 1000 pairs (max lhs-rhs " + fmt("%.3g", worst) + ")";
    return r;
}

// 4 --------------------------------------------------------------------------

CheckResult variance_property(const CheckOptions&) {
    CheckResult r;
    const std::size_t n = 8;
    const double sigma = 0.5;
    auto problem = make_quadratic_pair(n, 4, sigma);
    Rng rx = make_rng(4, 0, "check-variance-x");
    const std::vector<double> x = problem->initial_point(rx);
    const std::size_t repeats = 1000;
    bool ok = true;
    std::ostringstream detail;
    for (std::size_t nk : {1, 8, 64, 512}) {
        Rng rng = make_rng(4, nk, "check-variance");
        std::vector<double> sum(2 * n, 0.0), sum_sq(2 * n, 0.0);
        for (std::size_t t = 0; t < repeats; ++t) {
            const GradientMatrix y = problem->sample_mean_gradient(x, nk, rng);
            for (std::size_t e = 0; e < 2 * n; ++e) {
                sum[e] += y.data()[e];
                sum_sq[e] += y.data()[e] * y.data()[e];
            }
        }
        double worst = 0.0;
        for (std::size_t e = 0; e < 2 * n; ++e) {
            const double mean = sum[e] / repeats;
            const double var = (sum_sq[e] - repeats * mean * mean) / (repeats - 1);
            worst = std::max(worst, var);
        }
        const double bound = sigma * sigma / static_cast<double>(nk);
        const double ratio = worst / bound;
        if (!(ratio <= 1.5)) ok = false;
        detail << "N=" << nk << " max var/bound " << fmt("%.3f", ratio) << (nk == 512 ? "" : ", ");
    }
    r.passed = ok;
    r.detail = detail.str();
    return r;
}

// 5 --------------------------------------------------------------------------

CheckResult dssmg_monitor(const CheckOptions& options) {
    CheckResult r;
    const std::size_t seeds = 10, steps = 5000;
    std::vector<int> good(seeds, 0);
    std::vector<double> tail(seeds), best(seeds);
    parallel_for(seeds, options.threads, [&](std::size_t s) {
        auto problem = make_quadratic_pair(8, 500 + s, 0.1);
        MethodSpec spec;
        spec.name = "dssmg";
        spec.step = StepSchedule::harmonic();
        spec.samples = {32, 0.1};
        const auto x0 = initial_point_for(*problem, s, 0);
        Rng rng = make_rng(s, 0, "run");
        const MethodRun run = run_method(*problem, spec, x0, steps, rng);
        const MonitorSeries series = theorem_monitor(run.record, *problem);
        const double total = series.back().partial_sum;
        const double before = series[series.size() - steps / 10 - 1].partial_sum;
        double b = INFINITY;
        for (const RunRow& row : run.record.rows()) b = std::min(b, criticality_measure(*problem, row.x));
        tail[s] = total > 0.0 ? (total - before) / total : 0.0;
        best[s] = b;
        good[s] = tail[s] < 0.05 && b < 0.05;
    });
    const int passed = std::count(good.begin(), good.end(), 1);
    r.passed = passed >= 9;
    r.detail = std::to_string(passed) + "/10 seeds (max tail share " +
               fmt("%.4f", *std::max_element(tail.begin(), tail.end())) + ", max best criticality " +
               fmt("%.4f", *std::max_element(best.begin(), best.end())) + ")";
    return r;
}

// 6 --------------------------------------------------------------------------

CheckResult front_comparison(const CheckOptions& options) {
    CheckResult r;
    const std::string root = scratch_dir(options, "fronts");
    std::vector<std::string> dirs;
    for (const char* method : {"smg", "dssmg"}) {
        const json config = {
            {"problem", {{"name", "quadratic_pair"}, {"params", {{"dim", 8}, {"seed", 6}, {"noise_sigma", 1.0}}}}},
            {"optimizer", {{"name", method}}},
            {"steps", 100},
            {"step_schedule", {{"kind", "harmonic"}}},
            {"sample_schedule", {{"nb", 32}, {"q", 0.1}}},
            {"seeds", {0, 1, 2, 3, 4, 5, 6, 7, 8, 9}},
            {"population", 200},
            {"output", root + "/" + method}};
        RunConfig rc = RunConfig::from_json(config, ProblemRegistry::with_builtins());
        run_experiment(rc, options.threads);
        dirs.push_back(rc.output);
    }
    const FrontSummary front = front_cmd(dirs, root + "/front");
    int wins = 0;
    double smg = 0.0, dssmg = 0.0;
    for (std::size_t s = 0; s < 10; ++s) {
        smg += front.hypervolume[0][s] / 10.0;
        dssmg += front.hypervolume[1][s] / 10.0;
        if (front.hypervolume[1][s] >= front.hypervolume[0][s]) ++wins;
    }
    r.passed = wins >= 8;
    r.detail = "DSSMG >= SMG in " + std::to_string(wins) + "/10 seeds (mean hv " + fmt("%.4f", dssmg) + " vs " +
               fmt("%.4f", smg) + ")";
    return r;
}

// 7 --------------------------------------------------------------------------

CheckResult bptt_gradients(const CheckOptions&) {
    CheckResult r;
    const double eps = 1e-5, floor = 1e-6;
    std::size_t failures = 0, entries = 0;
    double worst = 0.0;
    for (std::uint64_t s = 0; s < 20; ++s) {
        auto problem = make_quadratic_pair(2, s, 0.0);
        Rng rng = make_rng(s, 0, "check-bptt");
        const auto x0 = problem->initial_point(rng);
        Ml2oParams params = Ml2oParams::random(2, 3, s, 0.5);
        MetaTrainOptions o;
        o.step = StepSchedule::constant(0.1);
        const Ml2oState state = Ml2oState::zeros(2, 2, 3);
        params.store().zero_grad();
        const PeriodResult pr = run_period(*problem, params, x0, state, 4, 0, o, rng, true);
        const auto loss = [&](const ParamStore& ps) {
            Ml2oParams q = params;
            for (const auto& name : ps.names()) q.store().mutable_value(name) = ps.value(name);
            Rng unused(0);
            return run_period(*problem, q, x0, state, 4, 0, o, unused, false, &pr.inputs).loss;
        };
        const ParamStore fd = finite_diff_gradient(loss, params.store(), eps);
        for (const auto& name : params.store().names()) {
            const Tensor& a = params.store().grad(name);
            const Tensor& b = fd.value(name);
            for (std::size_t i = 0; i < a.size(); ++i) {
                const double rel = std::abs(a[i] - b[i]) / std::max({std::abs(a[i]), std::abs(b[i]), floor});
                worst = std::max(worst, rel);
                ++entries;
                if (!(rel < 1e-4)) ++failures;
            }
        }
    }
    r.passed = failures == 0;
    r.detail = std::to_string(failures) + " failures over " + std::to_string(entries) + " entries (worst rel err " +
               fmt("%.2e", worst) + ")";
    return r;
}

// 8 --------------------------------------------------------------------------

CheckResult learning_signal(const CheckOptions& options) {
    CheckResult r;
    const std::size_t seeds = 10, held_out = 50, dim = 8, hidden = 8;
    const double alpha = 0.01;
    MetaTrainOptions o;
    o.horizon = 100;
    o.period = 10;
    o.meta_lr = 1.0;
    o.epochs = 200;
    o.step = StepSchedule::constant(alpha);
    o.gradients = GradientMode::exact;
    std::vector<int> lower(seeds, 0);
    std::vector<int> wins(seeds, 0);
    parallel_for(seeds, options.threads, [&](std::size_t s) {
        MetaTrainOptions os = o;
        os.seed = s;
        const auto sampler = [](std::size_t, Rng& rng) {
            auto p = make_quadratic_pair(dim, rng(), 0.0);
            return TrainingTask{p, p->initial_point(rng)};
        };
        const Ml2oParams init = Ml2oParams::random(2, hidden, s);
        const Ml2oParams trained = meta_train(sampler, init, os).params;
        double lt = 0.0, lu = 0.0;
        for (std::size_t h = 0; h < held_out; ++h) {
            Rng pr = make_rng(1000 + s, h, "held-out");
            auto p = make_quadratic_pair(dim, pr(), 0.0);
            const auto x0 = p->initial_point(pr);
            Rng a = make_rng(s, h, "held-out-run");
            Rng b = a;
            lt += evaluate_meta_loss(*p, trained, x0, o.horizon, os, a);
            lu += evaluate_meta_loss(*p, init, x0, o.horizon, os, b);

            Ml2oState state = Ml2oState::zeros(dim, 2, hidden);
            std::vector<double> x = x0;
            Rng c = make_rng(s, h, "held-out-step");
            for (std::size_t k = 1; k <= 100; ++k) x = ml2o_step(*p, x, state, trained, alpha, c).x;
            OptimizerState m = OptimizerState::at(x0);
            for (std::size_t k = 1; k <= 100; ++k) mgda_step(*p, m, StepSchedule::constant(alpha));
            const auto fl = p->eval(x);
            const auto fm = p->eval(m.x);
            if (std::max(fl[0], fl[1]) < std::max(fm[0], fm[1])) ++wins[s];
        }
        lower[s] = lt < lu;
    });
    const int lower_count = std::count(lower.begin(), lower.end(), 1);
    int total_wins = 0, min_wins = static_cast<int>(held_out);
    bool all_wins = true;
    for (int w : wins) {
        total_wins += w;
        min_wins = std::min(min_wins, w);
        if (w < 35) all_wins = false;
    }
    r.passed = lower_count >= 9 && all_wins;
    r.detail = "meta-loss lower in " + std::to_string(lower_count) + "/10 seeds, beats MGDA at step 100 on " +
               std::to_string(total_wins) + "/500 held-out problems (worst seed " + std::to_string(min_wins) + "/50)";
    return r;
}

// 9 --------------------------------------------------------------------------

CheckResult guard_invariant(const CheckOptions& options) {
    CheckResult r;
    std::size_t runs = 0, steps = 0, violations = 0;
    std::mutex mu;
    const auto add = [&](const GuardedRunResult& g) {
        std::lock_guard lock(mu);
        ++runs;
        steps += g.decisions.size();
        violations += g.invariant_violations;
    };
    parallel_for(10, options.threads, [&](std::size_t s) {
        const Ml2oParams params = Ml2oParams::random(2, 8, s, 0.5);
        auto quad = make_quadratic_pair(8, 900 + s, 0.3);
        GuardedRunOptions go;
        go.steps = 500;
        go.step = StepSchedule::constant(0.2);
        go.samples = {4, 0.1};
        Rng rng = make_rng(s, 0, "check-guard");
        add(gml2o_run(*quad, params, initial_point_for(*quad, s, 0), go, rng));
        add(gml2o_deterministic_run(*quad, params, initial_point_for(*quad, s, 1), 0.5, 500));
        auto mtl = make_toy_mtl(900 + s, 512, 4, 16);
        go.steps = 100;
        go.step = StepSchedule::constant(0.5);
        add(gml2o_run(*mtl, params, initial_point_for(*mtl, s, 0), go, rng));
    });
    r.passed = violations == 0;
    r.detail = std::to_string(violations) + " violations over " + std::to_string(steps) + " steps in " +
               std::to_string(runs) + " runs";
    return r;
}

// 10 -------------------------------------------------------------------------

CheckResult mtl_dominance(const CheckOptions& options) {
    CheckResult r;
    const std::string root = scratch_dir(options, "mtl");
    const ProblemRegistry registry = ProblemRegistry::with_builtins();
    TrainConfig train = TrainConfig::from_json(
        {{"problem", {{"name", "toy_mtl"}, {"params", {{"hidden", 20}}}}},
         {"hidden", 8},
         {"horizon", 100},
         {"period", 10},
         {"meta_lr", 1.0},
         {"epochs", 30},
         {"step_schedule", {{"kind", "constant"}, {"value", 0.1}}},
         {"gradients", "stochastic"},
         {"output", root + "/train"}},
        registry);
    const TrainSummary ts = train_ml2o_cmd(train);
    auto params = std::make_shared<const Ml2oParams>(load_checkpoint(ts.checkpoint));

    const std::size_t seeds = 10, steps = 700;
    const char* names[3] = {"dssmg", "ml2o", "gml2o"};
    std::vector<std::array<std::array<double, 2>, 3>> finals(seeds);
    parallel_for(seeds * 3, options.threads, [&](std::size_t i) {
        const std::size_t s = i / 3, m = i % 3;
        auto problem = registry.make("toy_mtl", {{"seed", 100 + s}, {"hidden", 20}});
        MethodSpec spec;
        spec.name = names[m];
        spec.step = StepSchedule::constant(0.1);
        spec.samples = {32, 0.1};
        spec.ml2o = params;
        const auto x0 = initial_point_for(*problem, s, 0);
        Rng rng = make_rng(s, 0, "run");
        const MethodRun run = run_method(*problem, spec, x0, steps, rng);
        finals[s][m] = {run.record.back().losses[0], run.record.back().losses[1]};
    });
    double mean[3][2] = {};
    for (const auto& f : finals) {
        for (int m = 0; m < 3; ++m) {
            for (int t = 0; t < 2; ++t) mean[m][t] += f[m][t] / seeds;
        }
    }
    bool ok = true;
    std::ostringstream detail;
    for (int t = 0; t < 2; ++t) {
        const double bar = std::min(mean[0][t], mean[1][t]) + 0.05;
        if (!(mean[2][t] <= bar)) ok = false;
        detail << "task " << t + 1 << ": gml2o " << fmt("%.4f", mean[2][t]) << " dssmg " << fmt("%.4f", mean[0][t])
               << " ml2o " << fmt("%.4f", mean[1][t]) << (t == 0 ? "; " : "");
    }
    r.passed = ok;
    r.detail = detail.str();
    return r;
}

// 11 -------------------------------------------------------------------------

// Centers U[-1, 1], curvatures B B^T / n + 0.1 I.
std::shared_ptr<QuadraticPair> spd_quadratic_pair(std::size_t n, std::uint64_t seed) {
    Rng rng = make_rng(seed, 0, "spd-quadratic");
    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    std::vector<double> c[2], a[2];
    for (int i = 0; i < 2; ++i) {
        c[i].resize(n);
        for (double& v : c[i]) v = unit(rng);
        const GradientMatrix b = random_matrix(n, n, rng);
        a[i].assign(n * n, 0.0);
        for (std::size_t r = 0; r < n; ++r) {
            for (std::size_t q = 0; q < n; ++q) a[i][r * n + q] = dot(b.row(r), b.row(q)) / n + (r == q ? 0.1 : 0.0);
        }
    }
    return std::make_shared<QuadraticPair>(c[0], c[1], a[0], a[1], 0.0);
}

CheckResult deterministic_guard(const CheckOptions& options) {
    CheckResult r;
    const std::size_t seeds = 10, steps = 5000;
    std::vector<std::size_t> reached(seeds, 0);
    parallel_for(seeds, options.threads, [&](std::size_t s) {
        auto problem = spd_quadratic_pair(8, 1100 + s);
        const Ml2oParams params = Ml2oParams::random(2, 8, s);
        const double alpha = 1.0 / problem->lipschitz();
        const GuardedRunResult g =
            gml2o_deterministic_run(*problem, params, initial_point_for(*problem, s, 0), alpha, steps);
        for (const RunRow& row : g.record.rows()) {
            if (row.criticality < 1e-4) {
                reached[s] = row.k == 0 ? 1 : row.k;
                break;
            }
        }
    });
    const auto ok = std::count_if(reached.begin(), reached.end(), [](std::size_t k) { return k > 0; });
    r.passed = ok == static_cast<long>(seeds);
    r.detail = std::to_string(ok) + "/10 seeds reach ||d|| < 1e-4 (slowest at step " +
               std::to_string(*std::max_element(reached.begin(), reached.end())) + ")";
    return r;
}

// 12 -------------------------------------------------------------------------

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

CheckResult determinism(const CheckOptions& options) {
    CheckResult r;
    const std::string root = scratch_dir(options, "determinism");
    save_checkpoint(Ml2oParams::random(2, 4, 12), root + "/params.json");
    std::size_t files = 0, mismatched = 0;
    for (const char* method : {"dssmg", "moco", "adam", "gml2o"}) {
        json opt = {{"name", method}};
        if (std::string(method) == "gml2o") opt["params"] = {{"checkpoint", root + "/params.json"}};
        std::vector<std::string> out;
        for (int rep = 0; rep < 2; ++rep) {
            const json config = {
                {"problem", {{"name", "quadratic_pair"}, {"params", {{"dim", 4}, {"seed", 3}, {"noise_sigma", 0.2}}}}},
                {"optimizer", opt},
                {"steps", 50},
                {"step_schedule", {{"kind", "constant"}, {"value", 0.1}}},
                {"sample_schedule", {{"nb", 4}, {"q", 0.1}}},
                {"seeds", {1, 2, 3}},
                {"population", 3},
                {"output", root + "/" + method + "_" + std::to_string(rep)}};
            const RunConfig rc = RunConfig::from_json(config, ProblemRegistry::with_builtins());
            run_experiment(rc, rep == 0 ? 1 : std::max<std::size_t>(2, options.threads));
            out.push_back(rc.output);
        }
        for (const auto& entry : fs::directory_iterator(out[0])) {
            if (entry.path().extension() != ".csv" || entry.path().filename() == "timings.csv") continue;
            ++files;
            if (slurp(entry.path()) != slurp(fs::path(out[1]) / entry.path().filename())) ++mismatched;
        }
    }
    r.passed = files > 0 && mismatched == 0;
    r.detail = std::to_string(mismatched) + " of " + std::to_string(files) + " CSV files differ between repeated runs";
    return r;
}

using CheckFn = CheckResult (*)(const CheckOptions&);

struct CheckEntry {
    const char* title;
    CheckFn fn;
};

const CheckEntry kChecks[kCheckCount] = {
    {"min-norm solver matches oracles", minnorm_oracles},
    {"descent invariant", descent_invariant},
    {"Hoelder continuity of d(W)", holder_property},
    {"variance of averaged gradients", variance_property},
    {"DSSMG partial-sum monitor", dssmg_monitor},
    {"DSSMG vs SMG front hypervolume", front_comparison},
    {"BPTT vs finite differences", bptt_gradients},
    {"ML2O learning signal", learning_signal},
    {"guard invariant", guard_invariant},
    {"GML2O on toy MTL", mtl_dominance},
    {"deterministic guard convergence", deterministic_guard},
    {"run determinism", determinism},
};

}  // namespace

const char* check_title(int id) {
    if (id < 1 || id > kCheckCount) throw Error("no check with id " + std::to_string(id));
    return kChecks[id - 1].title;
}

CheckResult run_check(int id, const CheckOptions& options) {
    const char* title = check_title(id);
    const auto t0 = std::chrono::steady_clock::now();
    CheckResult r;
    try {
        r = kChecks[id - 1].fn(options);
    } catch (const std::exception& e) {
        r.passed = false;
        r.detail = std::string("error: ") + e.what();
    }
    r.id = id;
    r.title = title;
    r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return r;
}

std::vector<CheckResult> run_checks(const std::vector<int>& ids, const CheckOptions& options) {
    std::vector<int> todo = ids;
    if (todo.empty()) {
        for (int i = 1; i <= kCheckCount; ++i) todo.push_back(i);
    }
    std::vector<CheckResult> out;
    for (int id : todo) out.push_back(run_check(id, options));
    return out;
}

std::string format_check(const CheckResult& r) {
    char head[160];
    std::snprintf(head, sizeof head, "[%s] %2d %s (%.1fs): ", r.passed ? "PASS" : "FAIL", r.id, r.title.c_str(),
                  r.seconds);
    return head + r.detail;
}

}  // namespace gml2o
