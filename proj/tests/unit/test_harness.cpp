#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "gml2o/errors.hpp"
#include "gml2o/harness.hpp"

using namespace gml2o;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::string fresh_dir(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("gml2o_harness_" + name);
    fs::remove_all(p);
    return p.string();
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

json base_config(const std::string& optimizer, const std::string& out) {
    return {{"problem", {{"name", "quadratic_pair"}, {"params", {{"dim", 3}, {"seed", 2}, {"noise_sigma", 0.3}}}}},
            {"optimizer", {{"name", optimizer}}},
            {"steps", 20},
            {"step_schedule", {{"kind", "constant"}, {"value", 0.1}}},
            {"sample_schedule", {{"nb", 2}, {"q", 0.1}}},
            {"seeds", {1, 2}},
            {"output", out}};
}

RunConfig parse(const json& j) { return RunConfig::from_json(j, ProblemRegistry::with_builtins()); }

std::size_t line_count(const std::string& s) { return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n')); }

}  // namespace

TEST_CASE("config errors list every violated field") {
    json j = base_config("nadam", "x");
    j["steps"] = 0;
    j["seeds"] = json::array();
    j["colour"] = "blue";
    try {
        parse(j);
        FAIL("expected a config error");
    } catch (const ConfigError& e) {
        const std::string all = e.what();
        CHECK(all.find("optimizer") != std::string::npos);
        CHECK(all.find("steps") != std::string::npos);
        CHECK(all.find("seeds") != std::string::npos);
        CHECK(all.find("colour") != std::string::npos);
        CHECK(e.violations().size() >= 4);
    }
    json k = base_config("gml2o", "x");
    CHECK_THROWS_AS(parse(k), ConfigError);
    json p = base_config("dssmg", "x");
    p["problem"]["name"] = "zdt1";
    CHECK_THROWS_AS(parse(p), ConfigError);
}

TEST_CASE("duplicate seeds give identical files") {
    const std::string out = fresh_dir("dup");
    json j = base_config("dssmg", out);
    j["seeds"] = {1, 1};
    run_experiment(parse(j), 2);
    CHECK(slurp(fs::path(out) / run_file_name(0, 1, 0)) == slurp(fs::path(out) / run_file_name(1, 1, 0)));
    CHECK(fs::exists(fs::path(out) / "manifest.json"));
    const json manifest = json::parse(slurp(fs::path(out) / "manifest.json"));
    CHECK(manifest["toolkit_version"] == kToolkitVersion);
    CHECK(manifest["config"]["optimizer"]["name"] == "dssmg");
}

TEST_CASE("run CSV layout") {
    const std::string out = fresh_dir("layout");
    json j = base_config("mgda", out);
    j["population"] = 3;
    run_experiment(parse(j), 1);
    const std::string csv = slurp(fs::path(out) / run_file_name(0, 1, 2));
    CHECK(csv.rfind("k,f1,f2,direction_norm,alpha,samples,guard_choice,criticality\n", 0) == 0);
    CHECK(line_count(csv) == 22);
    const std::string finals = slurp(fs::path(out) / final_file_name(1, 2));
    CHECK(line_count(finals) == 4);
    CHECK(fs::exists(fs::path(out) / "timings.csv"));
}

TEST_CASE("output is independent of the thread count") {
    const std::string a = fresh_dir("t1"), b = fresh_dir("t4");
    json j = base_config("moco", a);
    j["population"] = 4;
    run_experiment(parse(j), 1);
    j["output"] = b;
    run_experiment(parse(j), 4);
    for (const auto& e : fs::directory_iterator(a)) {
        const std::string name = e.path().filename().string();
        if (name == "timings.csv" || name == "manifest.json") continue;
        CHECK(slurp(e.path()) == slurp(fs::path(b) / name));
    }
}

TEST_CASE("failed runs leave no partial files") {
    const std::string out = fresh_dir("fail");
    const std::string ckpt = fresh_dir("wrong_m.json");
    save_checkpoint(Ml2oParams::random(3, 2, 0), ckpt);
    json j = base_config("gml2o", out);
    j["optimizer"]["params"] = {{"checkpoint", ckpt}};
    CHECK_THROWS(run_experiment(parse(j), 1));
    CHECK((!fs::exists(out) || fs::is_empty(out)));
}

TEST_CASE("training command") {
    const std::string out = fresh_dir("train");
    const json j = {{"problem", {{"name", "quadratic_pair"}, {"params", {{"dim", 3}}}}},
                    {"hidden", 3},
                    {"horizon", 12},
                    {"period", 4},
                    {"meta_lr", 0.05},
                    {"epochs", 0},
                    {"output", out}};
    const TrainConfig zero = TrainConfig::from_json(j, ProblemRegistry::with_builtins());
    train_ml2o_cmd(zero);
    CHECK(load_checkpoint(out + "/checkpoint.json") == Ml2oParams::random(2, 3, 0));

    json full = j;
    full["epochs"] = 4;
    full["output"] = out + "_full";
    const TrainSummary s = train_ml2o_cmd(TrainConfig::from_json(full, ProblemRegistry::with_builtins()));
    CHECK(s.trace_rows == 4 * 3);
    CHECK(line_count(slurp(s.trace)) == 1 + 12);

    json half = j;
    half["epochs"] = 2;
    half["output"] = out + "_half";
    train_ml2o_cmd(TrainConfig::from_json(half, ProblemRegistry::with_builtins()));
    json rest = j;
    rest["epochs"] = 4;
    rest["resume"] = out + "_half/checkpoint.json";
    rest["output"] = out + "_rest";
    train_ml2o_cmd(TrainConfig::from_json(rest, ProblemRegistry::with_builtins()));
    CHECK(load_checkpoint(out + "_rest/checkpoint.json") == load_checkpoint(out + "_full/checkpoint.json"));

    json bad = j;
    bad["period"] = 5;
    CHECK_THROWS_AS(TrainConfig::from_json(bad, ProblemRegistry::with_builtins()), ConfigError);
}

TEST_CASE("compare and front") {
    const std::string a = fresh_dir("cmp_a"), b = fresh_dir("cmp_b"), c = fresh_dir("cmp_c");
    run_experiment(parse(base_config("smg", a)), 1);
    run_experiment(parse(base_config("dssmg", b)), 1);

    const auto self = compare_cmd({a}, CompareMetric::final_max_loss);
    REQUIRE(self.size() == 1);
    CHECK(self[0].count == 2);
    const auto twice = compare_cmd({a, a}, CompareMetric::final_max_loss);
    CHECK(twice[0].mean == twice[1].mean);

    json one = base_config("dssmg", a);
    one["seeds"] = {4};
    one["output"] = c;
    run_experiment(parse(one), 1);
    const auto single = compare_cmd({c}, CompareMetric::final_max_loss);
    CHECK(single[0].stddev == 0.0);

    const auto rows = compare_cmd({a, b}, CompareMetric::hypervolume, fresh_dir("cmp_out"));
    CHECK(rows[1].optimizer == "dssmg");

    json other = base_config("smg", fresh_dir("cmp_other"));
    other["steps"] = 5;
    run_experiment(parse(other), 1);
    CHECK_THROWS(compare_cmd({a, other["output"].get<std::string>()}, CompareMetric::final_max_loss));

    const std::string empty = fresh_dir("cmp_empty");
    fs::create_directories(empty);
    CHECK_THROWS(compare_cmd({empty}, CompareMetric::final_max_loss));

    const FrontSummary f = front_cmd({a, b}, fresh_dir("front_out"));
    CHECK(f.reference.size() == 2);
    CHECK(f.hypervolume.size() == 2);
    CHECK(f.hypervolume[0].size() == 2);
    CHECK(f.hypervolume[1][0] > 0.0);

    CHECK_THROWS_AS(parse_compare_metric("igd"), ConfigError);
}
