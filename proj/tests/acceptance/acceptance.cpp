#include <cstdio>
#include <cstdlib>
#include <string>
#include <vector>

#include "gml2o/checks.hpp"

// usage: acceptance [id ...]
int main(int argc, char** argv) {
    gml2o::CheckOptions options;
    options.scratch = "acceptance_scratch";
    if (const char* t = std::getenv("GML2O_THREADS")) options.threads = std::strtoul(t, nullptr, 10);
    std::vector<int> ids;
    for (int i = 1; i < argc; ++i) ids.push_back(std::atoi(argv[i]));
    if (ids.empty()) {
        for (int i = 1; i <= gml2o::kCheckCount; ++i) ids.push_back(i);
    }
    int failed = 0;
    for (int id : ids) {
        const gml2o::CheckResult r = gml2o::run_check(id, options);
        std::printf("%s\n", gml2o::format_check(r).c_str());
        std::fflush(stdout);
        if (!r.passed) ++failed;
    }
    std::printf("%d/%zu criteria passed\n", static_cast<int>(ids.size()) - failed, ids.size());
    return failed == 0 ? 0 : 1;
}
