#include "gml2o/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "gml2o/errors.hpp"
#include "gml2o/minnorm.hpp"
#include "gml2o/problems.hpp"

namespace gml2o {

const char* guard_choice_name(GuardChoice choice) noexcept {
    switch (choice) {
        case GuardChoice::none: return "";
        case GuardChoice::fallback: return "fallback";
        case GuardChoice::learned: return "learned";
    }
    return "";
}

void RunRecord::append(RunRow row) {
    if (!rows_.empty() && row.k <= rows_.back().k) {
        throw Error("run record: row k=" + std::to_string(row.k) + " does not follow k=" +
                    std::to_string(rows_.back().k));
    }
    if (row.losses.size() != objectives_) {
        throw Error("run record: row has " + std::to_string(row.losses.size()) + " losses, expected " +
                    std::to_string(objectives_));
    }
    rows_.push_back(std::move(row));
}

bool dominates(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) throw ShapeError("dominates: points of different length");
    bool strict = false;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (a[i] > b[i]) return false;
        if (a[i] < b[i]) strict = true;
    }
    return strict;
}

std::vector<ObjectivePoint> extract_front(const std::vector<ObjectivePoint>& points) {
    std::vector<ObjectivePoint> front;
    for (std::size_t i = 0; i < points.size(); ++i) {
        bool dominated = false;
        for (std::size_t j = 0; j < points.size() && !dominated; ++j) {
            dominated = j != i && dominates(points[j].values, points[i].values);
        }
        if (!dominated) front.push_back(points[i]);
    }
    return front;
}

namespace {

void check_points(const std::vector<std::vector<double>>& points, std::span<const double> reference, std::size_t m) {
    if (reference.size() != m) throw ShapeError("hypervolume: reference must have " + std::to_string(m) + " entries");
    for (std::size_t i = 0; i < points.size(); ++i) {
        if (points[i].size() != m) throw ShapeError("hypervolume: point " + std::to_string(i) + " has wrong length");
        if (!dominates(points[i], reference)) {
            throw Error("hypervolume: point " + std::to_string(i) + " does not dominate the reference");
        }
    }
}

double sweep_2d(std::vector<std::pair<double, double>> pts, double rx, double ry) {
    std::sort(pts.begin(), pts.end());
    double area = 0.0;
    double best_y = ry;
    for (const auto& [x, y] : pts) {
        if (y < best_y) {
            area += (rx - x) * (best_y - y);
            best_y = y;
        }
    }
    return area;
}

}  // namespace

double hypervolume_2d(const std::vector<std::vector<double>>& points, std::span<const double> reference) {
    check_points(points, reference, 2);
    std::vector<std::pair<double, double>> pts;
    pts.reserve(points.size());
    for (const auto& p : points) pts.emplace_back(p[0], p[1]);
    return sweep_2d(std::move(pts), reference[0], reference[1]);
}

double hypervolume_3d(const std::vector<std::vector<double>>& points, std::span<const double> reference) {
    check_points(points, reference, 3);
    std::vector<std::size_t> order(points.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return points[a][2] < points[b][2]; });
    // Slabs between consecutive third-objective levels; each slab's cross
    // section is the 2-d area of every point at or below its lower level.
    double volume = 0.0;
    std::vector<std::pair<double, double>> active;
    for (std::size_t i = 0; i < order.size(); ++i) {
        const auto& p = points[order[i]];
        active.emplace_back(p[0], p[1]);
        const double upper = i + 1 < order.size() ? points[order[i + 1]][2] : reference[2];
        const double thickness = upper - p[2];
        if (thickness > 0.0) volume += thickness * sweep_2d(active, reference[0], reference[1]);
    }
    return volume;
}

double hypervolume(const std::vector<std::vector<double>>& points, std::span<const double> reference) {
    if (reference.size() == 2) return hypervolume_2d(points, reference);
    if (reference.size() == 3) return hypervolume_3d(points, reference);
    throw UnsupportedError("hypervolume: only 2 or 3 objectives are supported");
}

std::vector<double> hypervolume_reference(const std::vector<std::vector<std::vector<double>>>& sets, double margin) {
    std::vector<double> lo, hi;
    for (const auto& set : sets) {
        for (const auto& p : set) {
            if (hi.empty()) {
                lo = p;
                hi = p;
                continue;
            }
            if (p.size() != hi.size()) throw ShapeError("hypervolume_reference: points of different length");
            for (std::size_t i = 0; i < p.size(); ++i) {
                lo[i] = std::min(lo[i], p[i]);
                hi[i] = std::max(hi[i], p[i]);
            }
        }
    }
    if (hi.empty()) throw Error("hypervolume_reference: no points");
    for (std::size_t i = 0; i < hi.size(); ++i) {
        const double span = hi[i] - lo[i];
        hi[i] += span > 0.0 ? margin * span : margin;
    }
    return hi;
}

MonitorSeries theorem_monitor(const RunRecord& run, const MooProblem& problem) {
    MonitorSeries series;
    double total = 0.0;
    for (std::size_t r = 1; r < run.size(); ++r) {
        const double c = criticality_measure(problem, run[r - 1].x);
        const double c2 = c * c;
        total += run[r].alpha * c2;
        series.push_back({run[r].k, run[r].alpha, c2, total});
    }
    return series;
}

}  // namespace gml2o
