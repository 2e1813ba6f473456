#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "gml2o/record.hpp"

namespace gml2o {

class MooProblem;

/// a_i <= b_i for all i and a_j < b_j for some j.
bool dominates(std::span<const double> a, std::span<const double> b);

struct ObjectivePoint {
    std::vector<double> values;
    std::size_t source = 0;
};

/// Points not dominated by any other point, in input order.
std::vector<ObjectivePoint> extract_front(const std::vector<ObjectivePoint>& points);

/// Area dominated by the points and bounded by `reference` (M = 2).
double hypervolume_2d(const std::vector<std::vector<double>>& points, std::span<const double> reference);
/// Volume dominated by the points and bounded by `reference` (M = 3).
double hypervolume_3d(const std::vector<std::vector<double>>& points, std::span<const double> reference);
/// Dispatches on the reference length (2 or 3).
double hypervolume(const std::vector<std::vector<double>>& points, std::span<const double> reference);

/// Componentwise max over all point sets, pushed out by `margin` times the
/// per-objective span (or by `margin` when the span is zero).
std::vector<double> hypervolume_reference(const std::vector<std::vector<std::vector<double>>>& sets,
                                          double margin = 0.1);

struct MonitorRow {
    std::size_t k = 0;
    double alpha = 0.0;
    /// ||d(x_{k-1})||^2 at the iterate the step started from.
    double criticality_sq = 0.0;
    /// sum_{j <= k} alpha_j ||d(x_{j-1})||^2
    double partial_sum = 0.0;
};

using MonitorSeries = std::vector<MonitorRow>;

/// Recomputes the exact criticality measure at every recorded iterate and
/// accumulates alpha-weighted partial sums. Row k pairs alpha_k with the
/// iterate step k started from.
MonitorSeries theorem_monitor(const RunRecord& run, const MooProblem& problem);

}  // namespace gml2o
