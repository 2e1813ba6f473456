#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "gml2o/gradient_matrix.hpp"

namespace gml2o {

class MooProblem;

/// Convex-combination weights on the probability simplex.
struct SimplexWeights {
    std::vector<double> weights;

    std::size_t size() const noexcept { return weights.size(); }
    double operator[](std::size_t i) const { return weights[i]; }
    /// True when every weight lies in [0, 1] and the sum is 1 within tol.
    bool on_simplex(double tol = 1e-12) const;
};

/// Result of the min-norm dual problem  min_{lambda in simplex} ||W^T lambda||^2.
struct MinNormSolution {
    SimplexWeights weights;
    /// sum_i lambda_i * row_i
    std::vector<double> combined;
    /// -combined; every optimizer moves along x + alpha * descent_direction.
    std::vector<double> descent_direction;
    double dual_norm_sq = 0.0;
    /// Frank-Wolfe duality gap at the returned weights.
    double gap = 0.0;
    std::size_t iterations = 0;
    bool converged = false;
};

constexpr double kDefaultMinNormTol = 1e-10;

/// Frank-Wolfe with away steps and exact line search, started from uniform
/// weights. Stops once the duality gap is <= tol or after max_iter
/// iterations (0 selects 100 * M). A run that exhausts max_iter comes back
/// with converged == false.
MinNormSolution solve_min_norm(const GradientMatrix& w, double tol = kDefaultMinNormTol, std::size_t max_iter = 0);

/// sum_i weights_i * row_i
std::vector<double> combine_rows(const GradientMatrix& w, std::span<const double> weights);

/// Closed-form minimiser for two rows:
///   lambda_1 = clip(((g2 - g1) . g2) / ||g1 - g2||^2, 0, 1);  (1, 0) when g1 == g2.
SimplexWeights min_norm_2obj_oracle(std::span<const double> g1, std::span<const double> g2);

/// Exhaustive search over the simplex grid with step 1/resolution (M in {2, 3}).
SimplexWeights simplex_grid_oracle(const GradientMatrix& w, std::size_t resolution);

/// ||W^T lambda||^2 for arbitrary weights.
double min_norm_objective(const GradientMatrix& w, std::span<const double> weights);

/// Euclidean projection onto the probability simplex (sort-based).
std::vector<double> project_to_simplex(std::span<const double> v);

/// ||J(x)^T lambda*(x)|| with J the exact Jacobian; zero exactly at Pareto
/// critical points.
double criticality_measure(const MooProblem& problem, std::span<const double> x, double tol = kDefaultMinNormTol);

}  // namespace gml2o
