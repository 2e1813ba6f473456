#include <cmath>
#include <random>

#include "doctest.h"
#include "gml2o/errors.hpp"
#include "gml2o/problems.hpp"

using namespace gml2o;

namespace {

double max_rel_diff(const GradientMatrix& a, const GradientMatrix& b, double floor = 1e-6) {
    double worst = 0.0;
    for (std::size_t k = 0; k < a.data().size(); ++k) {
        worst = std::max(worst, std::abs(a.data()[k] - b.data()[k]) /
                                    std::max({std::abs(a.data()[k]), std::abs(b.data()[k]), floor}));
    }
    return worst;
}

// distance from x to the segment [a, b] by dense discretisation
double segment_distance_grid(const std::vector<double>& a, const std::vector<double>& b, const std::vector<double>& x,
                             int points) {
    double best = INFINITY;
    for (int i = 0; i <= points; ++i) {
        const double t = double(i) / points;
        double d = 0.0;
        for (std::size_t j = 0; j < x.size(); ++j) {
            const double p = a[j] + t * (b[j] - a[j]) - x[j];
            d += p * p;
        }
        best = std::min(best, d);
    }
    return std::sqrt(best);
}

}  // namespace

TEST_CASE("quadratic pair values") {
    const QuadraticPair p({0.0}, {1.0}, 0.0);
    const auto f = p.eval(std::vector<double>{0.5});
    CHECK(f[0] == 0.125);
    CHECK(f[1] == 0.125);
    CHECK(p.eval(std::vector<double>{0.0})[0] == 0.0);
    CHECK(p.distance_to_front(std::vector<double>{2.0}) == 1.0);
    CHECK(p.distance_to_front(std::vector<double>{0.25}) == 0.0);
}

TEST_CASE("noise-free sampling is exact") {
    auto p = make_quadratic_pair(5, 3, 0.0);
    Rng rng(1);
    const auto x = p->initial_point(rng);
    CHECK(p->sample_gradient(x, rng) == p->full_jacobian(x));
}

TEST_CASE("centers come from U[-1, 1]") {
    auto p = make_quadratic_pair(50, 8, 0.0);
    for (int i = 0; i < 2; ++i) {
        for (double c : p->center(i)) CHECK(std::abs(c) <= 1.0);
    }
    auto q = make_quadratic_pair(50, 8, 0.0);
    CHECK(p->center(1) == q->center(1));
}

TEST_CASE("distance to the segment against a discretised segment") {
    const std::vector<double> c1 = {0.2, -0.4, 0.9}, c2 = {-0.5, 0.3, 0.1};
    const QuadraticPair p(c1, c2, 0.0);
    // perpendicular offset from c1
    const std::vector<double> dir = {c2[0] - c1[0], c2[1] - c1[1], c2[2] - c1[2]};
    std::vector<double> v = {1.0, 1.0, 0.0};
    v[2] = -(dir[0] * v[0] + dir[1] * v[1]) / dir[2];
    std::vector<double> x(3);
    for (int j = 0; j < 3; ++j) x[j] = c1[j] + 0.3 * v[j];
    const double nv = 0.3 * std::sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2]);
    CHECK(p.distance_to_front(x) == doctest::Approx(nv).epsilon(1e-12));
    Rng rng(4);
    std::normal_distribution<double> n(0.0, 1.0);
    for (int t = 0; t < 5; ++t) {
        const std::vector<double> y = {n(rng), n(rng), n(rng)};
        CHECK(p.distance_to_front(y) == doctest::Approx(segment_distance_grid(c1, c2, y, 1000000)).epsilon(1e-6));
    }
}

TEST_CASE("distance needs a known front") {
    ProblemDefinition def;
    def.dim = 1;
    def.objectives = 2;
    def.eval = [](std::span<const double> x) { return std::vector<double>{x[0], -x[0]}; };
    def.jacobian = [](std::span<const double>) { return GradientMatrix::from_rows({{1.0}, {-1.0}}); };
    auto p = make_function_problem("line", def);
    CHECK_THROWS_AS(p->distance_to_front(std::vector<double>{0.0}), UnsupportedError);
}

TEST_CASE("analytic Jacobians match finite differences") {
    Rng rng(6);
    auto q = make_quadratic_pair(6, 2, 0.0);
    const auto xq = q->initial_point(rng);
    CHECK(max_rel_diff(q->full_jacobian(xq), finite_difference_jacobian(*q, xq)) < 1e-5);

    std::vector<double> a1(9, 0.0), a2(9, 0.0);
    for (int i = 0; i < 3; ++i) {
        a1[i * 3 + i] = 2.0 + i;
        a2[i * 3 + i] = 1.0;
    }
    a1[1] = a1[3] = 0.5;
    a2[5] = a2[7] = -0.3;
    const QuadraticPair general({0.1, 0.2, 0.3}, {-0.1, 0.0, 0.4}, a1, a2, 0.0);
    const std::vector<double> xg = {0.7, -0.2, 1.1};
    CHECK(max_rel_diff(general.full_jacobian(xg), finite_difference_jacobian(general, xg)) < 1e-5);
    CHECK(general.lipschitz() > 3.0);

    auto mtl = make_toy_mtl(3, 128, 4, 16);
    const auto xm = mtl->initial_point(rng);
    CHECK(max_rel_diff(mtl->full_jacobian(xm), finite_difference_jacobian(*mtl, xm, 1e-5), 1e-3) < 1e-5);
}

TEST_CASE("sample gradients are unbiased") {
    const double sigma = 0.5;
    auto p = make_quadratic_pair(4, 1, sigma);
    Rng rng(2);
    const auto x = p->initial_point(rng);
    const GradientMatrix exact = p->full_jacobian(x);
    GradientMatrix mean(2, 4);
    const int draws = 10000;
    for (int t = 0; t < draws; ++t) mean += p->sample_gradient(x, rng);
    mean *= 1.0 / draws;
    for (std::size_t k = 0; k < exact.data().size(); ++k) {
        CHECK(std::abs(mean.data()[k] - exact.data()[k]) <= 3.0 * sigma / 100.0);
    }
}

TEST_CASE("sample mean error shrinks like 1/sqrt(n)") {
    auto p = make_quadratic_pair(4, 1, 1.0);
    Rng rng(3);
    const auto x = p->initial_point(rng);
    const GradientMatrix exact = p->full_jacobian(x);
    std::vector<double> logn, loge;
    for (std::size_t n : {100, 1000, 10000, 100000}) {
        double err = 0.0;
        const int reps = 40;
        for (int r = 0; r < reps; ++r) {
            GradientMatrix d = p->sample_mean_gradient(x, n, rng);
            for (std::size_t k = 0; k < d.data().size(); ++k) d.data()[k] -= exact.data()[k];
            err += d.norm() / reps;
        }
        logn.push_back(std::log(double(n)));
        loge.push_back(std::log(err));
    }
    const double mx = (logn[0] + logn[1] + logn[2] + logn[3]) / 4, my = (loge[0] + loge[1] + loge[2] + loge[3]) / 4;
    double sxy = 0.0, sxx = 0.0;
    for (int i = 0; i < 4; ++i) {
        sxy += (logn[i] - mx) * (loge[i] - my);
        sxx += (logn[i] - mx) * (logn[i] - mx);
    }
    const double slope = sxy / sxx;
    CHECK(slope >= -0.6);
    CHECK(slope <= -0.4);
}

TEST_CASE("toy MTL: initial losses near ln C") {
    double total = 0.0;
    for (std::uint64_t s = 0; s < 10; ++s) {
        auto p = make_toy_mtl(s, 2048, 10, 32);
        Rng rng = make_rng(s, 0, "test-mtl");
        const auto f = p->eval(p->initial_point(rng));
        CHECK(f[0] > 0.0);
        CHECK(f[1] > 0.0);
        CHECK(std::abs(f[0] - std::log(10.0)) < 0.15);
        CHECK(std::abs(f[1] - std::log(10.0)) < 0.15);
        total += f[0];
    }
    CHECK(total > 0.0);
}

TEST_CASE("toy MTL: full batch equals the Jacobian, dimension and determinism") {
    auto p = make_toy_mtl(2, 64, 3, 64);
    CHECK(p->dim() == 50 * 16 + 50 + 3 * 50 + 3 + 3 * 50 + 3);
    Rng rng(5);
    const auto x = p->initial_point(rng);
    const GradientMatrix full = p->full_jacobian(x);
    const GradientMatrix batch = p->sample_gradient(x, rng);
    for (std::size_t k = 0; k < full.data().size(); ++k) {
        CHECK(batch.data()[k] == doctest::Approx(full.data()[k]).epsilon(1e-12));
    }
    const MtlDataset a = make_mtl_dataset(4, 100, 5), b = make_mtl_dataset(4, 100, 5);
    CHECK(a.inputs == b.inputs);
    CHECK(a.labels1 == b.labels1);
    CHECK(a.labels2 == b.labels2);
    CHECK_THROWS(make_toy_mtl(1, 10, 3, 11));
}

TEST_CASE("toy MTL: duplicating samples leaves eval unchanged") {
    MtlDataset d = make_mtl_dataset(9, 50, 4);
    MtlDataset twice = d;
    twice.inputs.insert(twice.inputs.end(), d.inputs.begin(), d.inputs.end());
    twice.labels1.insert(twice.labels1.end(), d.labels1.begin(), d.labels1.end());
    twice.labels2.insert(twice.labels2.end(), d.labels2.begin(), d.labels2.end());
    const ToyMtlProblem p1(d, 10, 8), p2(twice, 10, 8);
    Rng rng(1);
    const auto x = p1.initial_point(rng);
    const auto f1 = p1.eval(x), f2 = p2.eval(x);
    CHECK(f1[0] == doctest::Approx(f2[0]).epsilon(1e-13));
    CHECK(f1[1] == doctest::Approx(f2[1]).epsilon(1e-13));
}

TEST_CASE("registry") {
    ProblemRegistry reg = ProblemRegistry::with_builtins();
    auto quad = make_quadratic_pair(3, 1, 0.0);
    reg.add("quad2", quad);
    auto fetched = reg.make("quad2");
    const std::vector<double> x = {0.1, 0.2, 0.3};
    CHECK(fetched->eval(x) == quad->eval(x));
    CHECK_THROWS_AS(reg.add("quad2", quad), DuplicateError);
    CHECK_THROWS_AS(reg.make("nope"), NotFoundError);

    ProblemDefinition def;
    def.dim = 2;
    def.objectives = 2;
    def.eval = [](std::span<const double> v) {
        return std::vector<double>{v[0] * v[0] + std::sin(v[1]), std::exp(0.5 * v[0]) + v[1] * v[1]};
    };
    def.jacobian = [](std::span<const double> v) {
        return GradientMatrix::from_rows({{2 * v[0], std::cos(v[1])}, {0.5 * std::exp(0.5 * v[0]), 2 * v[1]}});
    };
    def.box = Box{{-1, -1}, {1, 1}};
    reg.add("custom", def);
    auto c = reg.make("custom");
    const std::vector<double> y = {0.3, -0.7};
    CHECK(max_rel_diff(c->full_jacobian(y), finite_difference_jacobian(*c, y)) < 1e-5);
}

TEST_CASE("registry params are type checked") {
    const ProblemRegistry reg = ProblemRegistry::with_builtins();
    CHECK_THROWS_AS(reg.make("quadratic_pair", {{"dim", "eight"}}), ConfigError);
    CHECK(reg.make("quadratic_pair", {{"dim", 3}})->dim() == 3);
}

TEST_CASE("evaluation counter") {
    auto counted = std::make_shared<CountingProblem>(make_quadratic_pair(2, 0, 0.0));
    const std::vector<double> x = {0.0, 0.0};
    counted->eval(x);
    Rng rng(0);
    counted->guard_evaluator(rng)(x);
    CHECK(counted->evaluations() == 2);
    counted->reset();
    CHECK(counted->evaluations() == 0);
}
