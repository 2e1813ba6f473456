#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace gml2o {

struct CheckOptions {
    /// Directory for files written by the harness-level checks.
    std::string scratch;
    std::size_t threads = 1;
};

struct CheckResult {
    int id = 0;
    std::string title;
    bool passed = false;
    std::string detail;
    double seconds = 0.0;
};

constexpr int kCheckCount = 12;

const char* check_title(int id);

/// Runs one acceptance check (1..12). Exceptions are reported as failures.
CheckResult run_check(int id, const CheckOptions& options);

/// Runs the listed checks (all when empty) in order.
std::vector<CheckResult> run_checks(const std::vector<int>& ids, const CheckOptions& options);

/// "[PASS] 3 title (1.2s): detail"
std::string format_check(const CheckResult& result);

}  // namespace gml2o
