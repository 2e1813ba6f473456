#include <cmath>
#include <random>

#include "doctest.h"
#include "gml2o/errors.hpp"
#include "gml2o/minnorm.hpp"
#include "gml2o/problems.hpp"
#include "gml2o/tensor.hpp"

using namespace gml2o;

namespace {

GradientMatrix rows(std::vector<std::vector<double>> r) { return GradientMatrix::from_rows(r); }

GradientMatrix uniform_matrix(std::size_t m, std::size_t n, Rng& rng) {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    GradientMatrix w(m, n);
    for (double& v : w.data()) v = u(rng);
    return w;
}

// argmin of lambda^2 a + ... by scanning lambda on a fine grid
double grid_lambda_2(std::span<const double> g1, std::span<const double> g2, int points) {
    double best = INFINITY, arg = 0.0;
    for (int i = 0; i <= points; ++i) {
        const double l = static_cast<double>(i) / points;
        double q = 0.0;
        for (std::size_t j = 0; j < g1.size(); ++j) {
            const double c = l * g1[j] + (1.0 - l) * g2[j];
            q += c * c;
        }
        if (q < best) {
            best = q;
            arg = l;
        }
    }
    return arg;
}

}  // namespace

TEST_CASE("two orthogonal unit rows") {
    const MinNormSolution s = solve_min_norm(rows({{1, 0}, {0, 1}}));
    CHECK(s.weights[0] == doctest::Approx(0.5).epsilon(1e-10));
    CHECK(s.dual_norm_sq == doctest::Approx(0.5).epsilon(1e-10));
    CHECK(s.converged);
}

TEST_CASE("identical rows give the row itself") {
    const MinNormSolution s = solve_min_norm(rows({{0.3, -2.0, 1.0}, {0.3, -2.0, 1.0}}));
    CHECK(s.dual_norm_sq == doctest::Approx(0.09 + 4.0 + 1.0).epsilon(1e-12));
}

TEST_CASE("opposed rows are Pareto critical") {
    const MinNormSolution s = solve_min_norm(rows({{2, 0}, {-1, 0}}));
    CHECK(s.weights[0] == doctest::Approx(1.0 / 3.0).epsilon(1e-9));
    CHECK(std::abs(s.descent_direction[0]) < 1e-9);
    CHECK(std::abs(s.descent_direction[1]) < 1e-12);
}

TEST_CASE("solution invariants") {
    Rng rng(5);
    for (int t = 0; t < 200; ++t) {
        const GradientMatrix w = uniform_matrix(2 + t % 4, 1 + t % 7, rng);
        const MinNormSolution s = solve_min_norm(w);
        CHECK(s.weights.on_simplex(1e-12));
        const auto c = combine_rows(w, s.weights.weights);
        for (std::size_t j = 0; j < w.cols(); ++j) {
            CHECK(std::abs(s.combined[j] - c[j]) <= 1e-10);
            CHECK(s.descent_direction[j] == -s.combined[j]);
        }
    }
}

TEST_CASE("two-objective oracle against a dense grid") {
    const std::vector<double> e1 = {1, 0}, e2 = {0, 1}, a = {2, 0}, b = {-1, 0};
    CHECK(min_norm_2obj_oracle(e1, e2)[0] == doctest::Approx(grid_lambda_2(e1, e2, 1000000)).epsilon(1e-6));
    CHECK(min_norm_2obj_oracle(a, b)[0] == doctest::Approx(grid_lambda_2(a, b, 1000000)).epsilon(1e-6));
    const SimplexWeights same = min_norm_2obj_oracle(e1, e1);
    CHECK(same[0] == 1.0);
    CHECK(same[1] == 0.0);
}

TEST_CASE("Frank-Wolfe matches the closed form on random M=2 instances") {
    Rng rng(9);
    double worst = 0.0;
    for (int t = 0; t < 1000; ++t) {
        const GradientMatrix w = uniform_matrix(2, 1 + t % 10, rng);
        const double fw = solve_min_norm(w).dual_norm_sq;
        const double oracle = min_norm_objective(w, min_norm_2obj_oracle(w.row(0), w.row(1)).weights);
        worst = std::max(worst, std::abs(fw - oracle));
    }
    CHECK(worst <= 1e-6);
}

TEST_CASE("grid oracle cases") {
    const SimplexWeights s2 = simplex_grid_oracle(rows({{1, 0}, {0, 1}}), 1000);
    CHECK(s2[0] == doctest::Approx(0.5));
    const SimplexWeights s3 = simplex_grid_oracle(rows({{1, 0, 0}, {0, 1, 0}, {0, 0, 1}}), 300);
    for (std::size_t i = 0; i < 3; ++i) CHECK(std::abs(s3[i] - 1.0 / 3.0) <= 1.0 / 300.0);
    const SimplexWeights z = simplex_grid_oracle(rows({{3, 1}, {0, 0}, {-2, 5}}), 50);
    CHECK(z[1] == 1.0);
    CHECK_THROWS_AS(simplex_grid_oracle(rows({{1}, {2}, {3}, {4}}), 20), UnsupportedError);
}

TEST_CASE("M=3 solver is never worse than the grid") {
    Rng rng(13);
    for (int t = 0; t < 100; ++t) {
        const GradientMatrix w = uniform_matrix(3, 1 + t % 6, rng);
        const double fw = solve_min_norm(w).dual_norm_sq;
        CHECK(fw <= min_norm_objective(w, simplex_grid_oracle(w, 200).weights) + 1e-12);
    }
}

TEST_CASE("descent property on converged solutions") {
    Rng rng(17);
    int violations = 0;
    for (int t = 0; t < 500; ++t) {
        const GradientMatrix w = uniform_matrix(2 + t % 5, 1 + t % 9, rng);
        const MinNormSolution s = solve_min_norm(w, 1e-10);
        if (s.gap > 1e-10) continue;
        for (std::size_t i = 0; i < w.rows(); ++i) {
            if (dot(w.row(i), s.descent_direction) > -s.dual_norm_sq + 1e-9) ++violations;
        }
    }
    CHECK(violations == 0);
}

TEST_CASE("exhausted iterations are flagged") {
    Rng rng(19);
    const GradientMatrix w = uniform_matrix(6, 20, rng);
    const MinNormSolution s = solve_min_norm(w, 1e-300, 2);
    CHECK_FALSE(s.converged);
    CHECK(s.iterations == 2);
    CHECK(s.weights.on_simplex());
}

TEST_CASE("simplex projection against a brute-force grid") {
    const auto p = project_to_simplex(std::vector<double>{0.6, 0.6});
    CHECK(p[0] == doctest::Approx(0.5));
    CHECK(p[1] == doctest::Approx(0.5));
    Rng rng(23);
    std::uniform_real_distribution<double> u(-1.0, 2.0);
    for (int t = 0; t < 20; ++t) {
        const std::vector<double> v = {u(rng), u(rng), u(rng)};
        const auto q = project_to_simplex(v);
        double best = INFINITY;
        const int res = 400;
        for (int i = 0; i <= res; ++i) {
            for (int j = 0; i + j <= res; ++j) {
                const double a = double(i) / res, b = double(j) / res, c = 1.0 - a - b;
                best = std::min(best, (a - v[0]) * (a - v[0]) + (b - v[1]) * (b - v[1]) + (c - v[2]) * (c - v[2]));
            }
        }
        const double d = (q[0] - v[0]) * (q[0] - v[0]) + (q[1] - v[1]) * (q[1] - v[1]) + (q[2] - v[2]) * (q[2] - v[2]);
        CHECK(d <= best + 1e-12);
        CHECK(d >= best - 2e-2);
    }
}

TEST_CASE("criticality on the identity quadratic pair") {
    const QuadraticPair p({0.0, 0.0, 0.0}, {1.0, -1.0, 2.0}, 0.0);
    const std::vector<double> mid = {0.5, -0.5, 1.0};
    CHECK(criticality_measure(p, mid) < 1e-9);
    CHECK(criticality_measure(p, p.center(0)) == 0.0);
    Rng rng(29);
    std::normal_distribution<double> n(0.0, 1.0);
    for (int t = 0; t < 100; ++t) {
        std::vector<double> x = {n(rng), n(rng), n(rng)};
        if (p.distance_to_front(x) >= 0.1) CHECK(criticality_measure(p, x) > 0.01);
    }
}

TEST_CASE("zero criticality iff zero lies in the hull (grid check)") {
    Rng rng(31);
    for (int t = 0; t < 50; ++t) {
        const GradientMatrix w = uniform_matrix(3, 2, rng);
        const double fw = solve_min_norm(w).dual_norm_sq;
        const double grid = min_norm_objective(w, simplex_grid_oracle(w, 300).weights);
        CHECK((fw < 1e-12) == (grid < 1e-4));
    }
}
