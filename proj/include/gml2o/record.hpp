#pragma once

#include <cstddef>
#include <limits>
#include <string>
#include <string_view>
#include <vector>

namespace gml2o {

enum class GuardChoice { none, fallback, learned };

const char* guard_choice_name(GuardChoice choice) noexcept;

/// One iteration of a run. Row 0 holds the initial point; row k the
/// iterate after step k.
struct RunRow {
    std::size_t k = 0;
    std::vector<double> x;
    std::vector<double> losses;
    double direction_norm = 0.0;
    double alpha = 0.0;
    std::size_t samples = 0;
    GuardChoice guard = GuardChoice::none;
    /// ||d(x_k)|| when the method computes it; NaN otherwise.
    double criticality = std::numeric_limits<double>::quiet_NaN();
    /// Seconds since the start of the run. Kept out of the trace CSV.
    double wall_time = 0.0;
};

class RunRecord {
public:
    RunRecord() = default;
    RunRecord(std::string problem, std::string optimizer, std::size_t objectives)
        : problem_(std::move(problem)), optimizer_(std::move(optimizer)), objectives_(objectives) {}

    /// Throws Error unless k strictly increases and the loss count is M.
    void append(RunRow row);

    const std::string& problem() const noexcept { return problem_; }
    const std::string& optimizer() const noexcept { return optimizer_; }
    std::size_t objectives() const noexcept { return objectives_; }
    const std::vector<RunRow>& rows() const noexcept { return rows_; }
    std::size_t size() const noexcept { return rows_.size(); }
    bool empty() const noexcept { return rows_.empty(); }
    const RunRow& back() const { return rows_.back(); }
    const RunRow& operator[](std::size_t i) const { return rows_[i]; }

    /// Number of completed steps (rows after the initial one).
    std::size_t steps() const noexcept { return rows_.empty() ? 0 : rows_.size() - 1; }

private:
    std::string problem_;
    std::string optimizer_;
    std::size_t objectives_ = 0;
    std::vector<RunRow> rows_;
};

}  // namespace gml2o
