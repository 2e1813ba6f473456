#include "gml2o/minnorm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "gml2o/errors.hpp"
#include "gml2o/problems.hpp"
#include "gml2o/tensor.hpp"

namespace gml2o {

bool SimplexWeights::on_simplex(double tol) const {
    double s = 0.0;
    for (double w : weights) {
        if (!(w >= 0.0 && w <= 1.0)) return false;
        s += w;
    }
    return std::abs(s - 1.0) <= tol;
}

std::vector<double> combine_rows(const GradientMatrix& w, std::span<const double> weights) {
    if (weights.size() != w.rows()) throw ShapeError("combine_rows: weight count does not match row count");
    std::vector<double> out(w.cols(), 0.0);
    for (std::size_t i = 0; i < w.rows(); ++i) {
        const auto r = w.row(i);
        const double li = weights[i];
        for (std::size_t j = 0; j < out.size(); ++j) out[j] += li * r[j];
    }
    return out;
}

double min_norm_objective(const GradientMatrix& w, std::span<const double> weights) {
    return squared_norm(combine_rows(w, weights));
}

namespace {

std::vector<double> gram(const GradientMatrix& w) {
    const std::size_t m = w.rows();
    std::vector<double> g(m * m);
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = i; j < m; ++j) {
            const double v = dot(w.row(i), w.row(j));
            g[i * m + j] = v;
            g[j * m + i] = v;
        }
    }
    return g;
}

}  // namespace

MinNormSolution solve_min_norm(const GradientMatrix& w, double tol, std::size_t max_iter) {
    w.validate();
    if (!(tol > 0.0)) throw Error("solve_min_norm: tol must be positive");
    const std::size_t m = w.rows();
    if (max_iter == 0) max_iter = 100 * m;

    const std::vector<double> g = gram(w);
    std::vector<double> lambda(m, 1.0 / static_cast<double>(m));
    std::vector<double> glam(m);

    MinNormSolution sol;
    for (std::size_t iter = 0;; ++iter) {
        for (std::size_t i = 0; i < m; ++i) {
            double s = 0.0;
            for (std::size_t j = 0; j < m; ++j) s += g[i * m + j] * lambda[j];
            glam[i] = s;
        }
        const double q = dot(lambda, glam);

        // Toward vertex: lowest index among minimisers of the gradient.
        std::size_t t = 0;
        for (std::size_t i = 1; i < m; ++i) {
            if (glam[i] < glam[t]) t = i;
        }
        const double fw_gap = 2.0 * (q - glam[t]);
        sol.gap = fw_gap;
        sol.iterations = iter;
        if (fw_gap <= tol) {
            sol.converged = true;
            break;
        }
        if (iter == max_iter) break;

        // Away vertex: active coordinate with the largest gradient.
        std::size_t a = m;
        for (std::size_t i = 0; i < m; ++i) {
            if (lambda[i] > 0.0 && (a == m || glam[i] > glam[a])) a = i;
        }
        const double away_gap = a < m ? 2.0 * (glam[a] - q) : -1.0;

        if (fw_gap >= away_gap) {
            const double denom = q - 2.0 * glam[t] + g[t * m + t];
            double gamma = denom > 0.0 ? (q - glam[t]) / denom : 1.0;
            gamma = std::clamp(gamma, 0.0, 1.0);
            for (std::size_t i = 0; i < m; ++i) lambda[i] *= (1.0 - gamma);
            lambda[t] += gamma;
        } else {
            const double gamma_max = lambda[a] / (1.0 - lambda[a]);
            const double denom = q - 2.0 * glam[a] + g[a * m + a];
            double gamma = denom > 0.0 ? (glam[a] - q) / denom : gamma_max;
            gamma = std::clamp(gamma, 0.0, gamma_max);
            for (std::size_t i = 0; i < m; ++i) lambda[i] *= (1.0 + gamma);
            lambda[a] -= gamma;
            if (gamma == gamma_max) lambda[a] = 0.0;
        }
        for (double& l : lambda) l = std::max(l, 0.0);
    }

    const double total = std::accumulate(lambda.begin(), lambda.end(), 0.0);
    for (double& l : lambda) l /= total;

    sol.weights.weights = lambda;
    sol.combined = combine_rows(w, lambda);
    sol.descent_direction.resize(sol.combined.size());
    for (std::size_t j = 0; j < sol.combined.size(); ++j) sol.descent_direction[j] = -sol.combined[j];
    sol.dual_norm_sq = squared_norm(sol.combined);
    return sol;
}

SimplexWeights min_norm_2obj_oracle(std::span<const double> g1, std::span<const double> g2) {
    if (g1.size() != g2.size()) throw ShapeError("min_norm_2obj_oracle: gradient lengths differ");
    double num = 0.0;
    double den = 0.0;
    for (std::size_t j = 0; j < g1.size(); ++j) {
        const double diff = g2[j] - g1[j];
        num += diff * g2[j];
        den += diff * diff;
    }
    if (den == 0.0) return {{1.0, 0.0}};
    const double l1 = std::clamp(num / den, 0.0, 1.0);
    return {{l1, 1.0 - l1}};
}

SimplexWeights simplex_grid_oracle(const GradientMatrix& w, std::size_t resolution) {
    const std::size_t m = w.rows();
    if (m != 2 && m != 3) throw UnsupportedError("simplex_grid_oracle supports 2 or 3 objectives, got " + std::to_string(m));
    if (resolution < 10) throw Error("simplex_grid_oracle: resolution must be >= 10");
    const std::vector<double> g = gram(w);
    const double step = 1.0 / static_cast<double>(resolution);
    auto quad = [&](const std::vector<double>& l) {
        double s = 0.0;
        for (std::size_t i = 0; i < m; ++i) {
            for (std::size_t j = 0; j < m; ++j) s += l[i] * g[i * m + j] * l[j];
        }
        return s;
    };
    std::vector<double> best;
    double best_val = std::numeric_limits<double>::infinity();
    std::vector<double> l(m);
    for (std::size_t i = 0; i <= resolution; ++i) {
        if (m == 2) {
            l[0] = static_cast<double>(i) * step;
            l[1] = static_cast<double>(resolution - i) * step;
            const double v = quad(l);
            if (v < best_val) {
                best_val = v;
                best = l;
            }
            continue;
        }
        for (std::size_t j = 0; i + j <= resolution; ++j) {
            l[0] = static_cast<double>(i) * step;
            l[1] = static_cast<double>(j) * step;
            l[2] = static_cast<double>(resolution - i - j) * step;
            const double v = quad(l);
            if (v < best_val) {
                best_val = v;
                best = l;
            }
        }
    }
    return {best};
}

std::vector<double> project_to_simplex(std::span<const double> v) {
    if (v.empty()) throw ShapeError("project_to_simplex: empty vector");
    std::vector<double> u(v.begin(), v.end());
    std::sort(u.begin(), u.end(), std::greater<>());
    double cumsum = 0.0;
    double theta = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) {
        cumsum += u[i];
        const double t = (cumsum - 1.0) / static_cast<double>(i + 1);
        if (u[i] - t > 0.0) theta = t;
    }
    std::vector<double> out(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) out[i] = std::max(v[i] - theta, 0.0);
    return out;
}

double criticality_measure(const MooProblem& problem, std::span<const double> x, double tol) {
    const MinNormSolution sol = solve_min_norm(problem.full_jacobian(x), tol);
    return std::sqrt(sol.dual_norm_sq);
}

}  // namespace gml2o
