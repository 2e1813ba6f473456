#include <cmath>
#include <random>

#include "doctest.h"
#include "gml2o/errors.hpp"
#include "gml2o/metrics.hpp"
#include "gml2o/problems.hpp"
#include "gml2o/runner.hpp"

using namespace gml2o;

namespace {

using Points = std::vector<std::vector<double>>;

double monte_carlo_volume(const Points& pts, const std::vector<double>& ref, const std::vector<double>& lo,
                          std::size_t samples, Rng& rng) {
    const std::size_t m = ref.size();
    std::vector<std::uniform_real_distribution<double>> dims;
    double box = 1.0;
    for (std::size_t i = 0; i < m; ++i) {
        dims.emplace_back(lo[i], ref[i]);
        box *= ref[i] - lo[i];
    }
    std::size_t hits = 0;
    std::vector<double> z(m);
    for (std::size_t s = 0; s < samples; ++s) {
        for (std::size_t i = 0; i < m; ++i) z[i] = dims[i](rng);
        for (const auto& p : pts) {
            bool covered = true;
            for (std::size_t i = 0; i < m && covered; ++i) covered = p[i] <= z[i];
            if (covered) {
                ++hits;
                break;
            }
        }
    }
    return box * static_cast<double>(hits) / static_cast<double>(samples);
}

std::vector<ObjectivePoint> random_points(std::size_t n, std::size_t m, Rng& rng) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<ObjectivePoint> out(n);
    for (std::size_t k = 0; k < n; ++k) {
        out[k].source = k;
        for (std::size_t i = 0; i < m; ++i) out[k].values.push_back(u(rng));
    }
    return out;
}

}  // namespace

TEST_CASE("dominance") {
    CHECK(dominates(std::vector<double>{1, 1}, std::vector<double>{2, 2}));
    CHECK_FALSE(dominates(std::vector<double>{1, 2}, std::vector<double>{2, 1}));
    CHECK_FALSE(dominates(std::vector<double>{1, 1}, std::vector<double>{1, 1}));
    CHECK(dominates(std::vector<double>{1, 1}, std::vector<double>{1, 2}));
}

TEST_CASE("front extraction") {
    std::vector<ObjectivePoint> same(4, ObjectivePoint{{0.5, 0.5}, 0});
    CHECK(extract_front(same).size() == 4);
    std::vector<ObjectivePoint> line;
    for (int k = 0; k < 10; ++k) line.push_back({{double(k), 10.0 - k}, std::size_t(k)});
    CHECK(extract_front(line).size() == 10);

    Rng rng(3);
    for (std::size_t m : {2, 3}) {
        const auto pts = random_points(200, m, rng);
        std::vector<std::size_t> expected;
        for (std::size_t a = 0; a < pts.size(); ++a) {
            bool dominated = false;
            for (std::size_t b = 0; b < pts.size() && !dominated; ++b) {
                bool all_le = true, some_lt = false;
                for (std::size_t i = 0; i < m; ++i) {
                    all_le = all_le && pts[b].values[i] <= pts[a].values[i];
                    some_lt = some_lt || pts[b].values[i] < pts[a].values[i];
                }
                dominated = all_le && some_lt;
            }
            if (!dominated) expected.push_back(a);
        }
        const auto front = extract_front(pts);
        REQUIRE(front.size() == expected.size());
        for (std::size_t k = 0; k < front.size(); ++k) CHECK(front[k].source == expected[k]);
        const auto twice = extract_front(front);
        CHECK(twice.size() == front.size());
    }
}

TEST_CASE("2D hypervolume") {
    CHECK(hypervolume_2d({{0, 0}}, std::vector<double>{1, 1}) == 1.0);
    CHECK(hypervolume_2d({{0, 1}, {1, 0}}, std::vector<double>{2, 2}) == 3.0);
    CHECK(hypervolume_2d({}, std::vector<double>{1, 1}) == 0.0);
    CHECK_THROWS_AS(hypervolume_2d({{0, 3}}, std::vector<double>{2, 2}), Error);
    Rng rng(4);
    const double mc = monte_carlo_volume({{0, 1}, {1, 0}}, {2, 2}, {0, 0}, 1000000, rng);
    CHECK(std::abs(mc - 3.0) < 0.02);
}

TEST_CASE("hypervolume against Monte Carlo") {
    Rng rng(5);
    for (std::size_t m : {2, 3}) {
        Points pts;
        for (const auto& p : random_points(30, m, rng)) pts.push_back(p.values);
        const std::vector<double> ref(m, 1.1);
        const double exact = hypervolume(pts, ref);
        const double mc = monte_carlo_volume(pts, ref, std::vector<double>(m, 0.0), 400000, rng);
        CHECK(std::abs(exact - mc) < 0.01);
    }
    CHECK_THROWS_AS(hypervolume({{0, 0, 0, 0}}, std::vector<double>(4, 1.0)), UnsupportedError);
}

TEST_CASE("3D hypervolume by hand") {
    // boxes [0,2]x[1,2]x[1,2] and [1,2]x[0,2]x[1,2] overlap in a unit cube
    const double v = hypervolume_3d({{0, 1, 1}, {1, 0, 1}}, std::vector<double>{2, 2, 2});
    CHECK(v == doctest::Approx(2.0 + 2.0 - 1.0));
    CHECK(hypervolume_3d({{0, 0, 0}}, std::vector<double>{1, 2, 3}) == doctest::Approx(6.0));
}

TEST_CASE("hypervolume is monotone under added points") {
    Rng rng(6);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (std::size_t m : {2, 3}) {
        Points pts;
        const std::vector<double> ref(m, 1.5);
        double prev = 0.0;
        for (int k = 0; k < 40; ++k) {
            std::vector<double> p(m);
            for (double& v : p) v = u(rng);
            pts.push_back(p);
            const double hv = hypervolume(pts, ref);
            CHECK(hv >= prev - 1e-15);
            prev = hv;
        }
    }
}

TEST_CASE("shared reference") {
    const auto ref = hypervolume_reference({{{0, 1}, {2, 0}}, {{1, 3}}});
    CHECK(ref[0] == doctest::Approx(2.2));
    CHECK(ref[1] == doctest::Approx(3.3));
}

TEST_CASE("theorem monitor") {
    auto p = make_quadratic_pair(3, 2, 0.1);
    RunRecord empty("quadratic_pair", "dssmg", 2);
    CHECK(theorem_monitor(empty, *p).empty());

    const QuadraticPair q({0.0}, {1.0}, 0.0);
    MethodSpec stuck;
    stuck.name = "mgda";
    Rng rng(0);
    const MethodRun still = run_method(q, stuck, std::vector<double>{0.5}, 20, rng);
    for (const MonitorRow& row : theorem_monitor(still.record, q)) {
        CHECK(row.criticality_sq == 0.0);
        CHECK(row.partial_sum == 0.0);
    }

    MethodSpec spec;
    spec.name = "dssmg";
    spec.step = StepSchedule::harmonic();
    spec.samples = {4, 0.2};
    const MethodRun run = run_method(*p, spec, std::vector<double>{2.0, -2.0, 1.0}, 300, rng);
    const MonitorSeries series = theorem_monitor(run.record, *p);
    CHECK(series.size() == 300);
    double prev = 0.0;
    for (const MonitorRow& row : series) {
        CHECK(row.partial_sum >= prev);
        prev = row.partial_sum;
    }
    CHECK(series[0].k == 1);
    CHECK(series[0].alpha == 1.0);
}
