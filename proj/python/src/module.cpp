#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "gml2o/checks.hpp"
#include "gml2o/errors.hpp"
#include "gml2o/harness.hpp"
#include "gml2o/metrics.hpp"
#include "gml2o/minnorm.hpp"
#include "gml2o/problems.hpp"
#include "gml2o/runner.hpp"

namespace py = pybind11;
using namespace gml2o;
using nlohmann::json;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;
using ProblemPtr = std::shared_ptr<MooProblem>;

json to_json(const py::object& obj) {
    if (obj.is_none()) return json::object();
    return json::parse(py::module_::import("json").attr("dumps")(obj).cast<std::string>());
}

GradientMatrix to_matrix(const Array& a) {
    if (a.ndim() != 2) throw ShapeError("expected a 2-d array of gradients (objectives x dim)");
    const auto rows = static_cast<std::size_t>(a.shape(0)), cols = static_cast<std::size_t>(a.shape(1));
    return GradientMatrix(rows, cols, std::vector<double>(a.data(), a.data() + rows * cols));
}

Array to_array(const GradientMatrix& g) {
    Array out({g.rows(), g.cols()});
    std::copy(g.data().begin(), g.data().end(), out.mutable_data());
    return out;
}

std::vector<double> to_vector(const Array& a) {
    if (a.ndim() != 1) throw ShapeError("expected a 1-d array");
    return {a.data(), a.data() + a.size()};
}

std::vector<std::vector<double>> to_points(const Array& a) {
    if (a.ndim() != 2) throw ShapeError("expected a 2-d array of points");
    std::vector<std::vector<double>> pts(a.shape(0));
    for (py::ssize_t i = 0; i < a.shape(0); ++i) pts[i].assign(a.data(i, 0), a.data(i, 0) + a.shape(1));
    return pts;
}

ProblemPtr make_problem(const std::string& name, const py::object& params) {
    static const ProblemRegistry registry = ProblemRegistry::with_builtins();
    return std::const_pointer_cast<MooProblem>(registry.make(name, to_json(params)));
}

py::dict record_dict(const RunRecord& record) {
    const std::size_t n = record.size(), m = record.objectives();
    const std::size_t d = n ? record[0].x.size() : 0;
    Array losses({n, m}), xs({n, d});
    py::array_t<double> norm(n), alpha(n), crit(n);
    py::array_t<std::size_t> samples(n);
    py::list guard;
    for (std::size_t k = 0; k < n; ++k) {
        const RunRow& r = record[k];
        std::copy(r.losses.begin(), r.losses.end(), losses.mutable_data(k, 0));
        std::copy(r.x.begin(), r.x.end(), xs.mutable_data(k, 0));
        norm.mutable_at(k) = r.direction_norm;
        alpha.mutable_at(k) = r.alpha;
        crit.mutable_at(k) = r.criticality;
        samples.mutable_at(k) = r.samples;
        guard.append(guard_choice_name(r.guard));
    }
    py::dict out;
    out["problem"] = record.problem();
    out["optimizer"] = record.optimizer();
    out["losses"] = losses;
    out["x"] = xs;
    out["direction_norm"] = norm;
    out["alpha"] = alpha;
    out["samples"] = samples;
    out["guard"] = guard;
    out["criticality"] = crit;
    return out;
}

StepSchedule step_from(const py::object& step) {
    if (py::isinstance<py::float_>(step) || py::isinstance<py::int_>(step)) return StepSchedule::constant(step.cast<double>());
    std::vector<std::string> errors;
    StepSchedule s = parse_step_schedule(to_json(step), "step", errors);
    if (!errors.empty()) throw ConfigError(errors);
    return s;
}

py::dict run(const ProblemPtr& problem, const std::string& optimizer, const Array& x0, std::size_t steps,
             std::uint64_t seed, const py::object& step, std::size_t nb, double q, const py::object& params) {
    RunConfig config;
    config.optimizer = {optimizer, to_json(params)};
    config.step = step_from(step);
    config.samples = {nb, q};
    if (is_learned_method(optimizer) && !config.optimizer.params.contains("checkpoint")) {
        throw ConfigError({"optimizer.params.checkpoint: required for " + optimizer});
    }
    const MethodSpec spec = make_method(config);
    const std::vector<double> x = to_vector(x0);
    MethodRun result;
    {
        py::gil_scoped_release release;
        Rng rng(seed);
        result = run_method(*problem, spec, x, steps, rng);
    }
    py::dict out = record_dict(result.record);
    out["guard_violations"] = result.guard_violations;
    return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "gml2o native core";
    m.attr("__version__") = kToolkitVersion;

    auto base = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
    py::register_exception<ConfigError>(m, "ConfigError", base.ptr());
    py::register_exception<ShapeError>(m, "ShapeError", base.ptr());
    py::register_exception<UnsupportedError>(m, "UnsupportedError", base.ptr());
    py::register_exception<NotFoundError>(m, "NotFoundError", base.ptr());
    py::register_exception<CheckpointError>(m, "CheckpointError", base.ptr());
    py::register_exception<NumericalError>(m, "NumericalError", base.ptr());

    m.def(
        "solve_min_norm",
        [](const Array& grads, double tol) {
            const MinNormSolution s = solve_min_norm(to_matrix(grads), tol);
            py::dict out;
            out["weights"] = s.weights.weights;
            out["direction"] = s.descent_direction;
            out["dual_norm_sq"] = s.dual_norm_sq;
            out["gap"] = s.gap;
            out["iterations"] = s.iterations;
            out["converged"] = s.converged;
            return out;
        },
        py::arg("grads"), py::arg("tol") = kDefaultMinNormTol);

    py::class_<MooProblem, ProblemPtr>(m, "Problem")
        .def_property_readonly("name", &MooProblem::name)
        .def_property_readonly("dim", &MooProblem::dim)
        .def_property_readonly("objectives", &MooProblem::objectives)
        .def_property_readonly("stochastic", &MooProblem::is_stochastic)
        .def("eval", [](const MooProblem& p, const Array& x) { return p.eval(to_vector(x)); })
        .def("jacobian", [](const MooProblem& p, const Array& x) { return to_array(p.full_jacobian(to_vector(x))); })
        .def("sample_gradient",
             [](const MooProblem& p, const Array& x, std::uint64_t seed) {
                 Rng rng(seed);
                 return to_array(p.sample_gradient(to_vector(x), rng));
             },
             py::arg("x"), py::arg("seed") = 0)
        .def("initial_point",
             [](const MooProblem& p, std::uint64_t seed) {
                 Rng rng(seed);
                 return p.initial_point(rng);
             },
             py::arg("seed") = 0)
        .def("criticality",
             [](const MooProblem& p, const Array& x) { return criticality_measure(p, to_vector(x)); })
        .def("distance_to_front", [](const MooProblem& p, const Array& x) { return p.distance_to_front(to_vector(x)); })
        .def("__repr__", [](const MooProblem& p) {
            return "<Problem " + p.name() + " dim=" + std::to_string(p.dim()) +
                   " objectives=" + std::to_string(p.objectives()) + ">";
        });

    m.def("make_problem", &make_problem, py::arg("name"), py::arg("params") = py::none());
    m.def("problem_names", [] { return ProblemRegistry::with_builtins().names(); });
    m.def("method_names", [] { return method_names(); });

    m.def("run", &run, py::arg("problem"), py::arg("optimizer"), py::arg("x0"), py::arg("steps"), py::arg("seed") = 0,
          py::arg("step") = 0.01, py::arg("nb") = 1, py::arg("q") = 0.1, py::arg("params") = py::none());

    m.def(
        "hypervolume",
        [](const Array& points, const Array& reference) { return hypervolume(to_points(points), to_vector(reference)); },
        py::arg("points"), py::arg("reference"));
    m.def(
        "pareto_front",
        [](const Array& points) {
            std::vector<ObjectivePoint> pts;
            for (auto& p : to_points(points)) pts.push_back({std::move(p), pts.size()});
            std::vector<std::size_t> idx;
            for (const auto& p : extract_front(pts)) idx.push_back(p.source);
            return idx;
        },
        py::arg("points"));
    m.def(
        "hypervolume_reference",
        [](const std::vector<Array>& sets, double margin) {
            std::vector<std::vector<std::vector<double>>> all;
            for (const auto& s : sets) all.push_back(to_points(s));
            return hypervolume_reference(all, margin);
        },
        py::arg("sets"), py::arg("margin") = 0.1);

    m.def(
        "run_experiment",
        [](const py::object& config, std::size_t threads, const std::string& base_dir) {
            const RunConfig c = RunConfig::from_json(to_json(config), ProblemRegistry::with_builtins(), base_dir);
            py::gil_scoped_release release;
            return run_experiment(c, threads).files;
        },
        py::arg("config"), py::arg("threads") = 1, py::arg("base_dir") = "");
    m.def(
        "train_ml2o",
        [](const py::object& config, const std::string& base_dir) {
            const TrainConfig c = TrainConfig::from_json(to_json(config), ProblemRegistry::with_builtins(), base_dir);
            TrainSummary s;
            {
                py::gil_scoped_release release;
                s = train_ml2o_cmd(c);
            }
            py::dict out;
            out["checkpoint"] = s.checkpoint;
            out["trace"] = s.trace;
            out["epochs_run"] = s.epochs_run;
            return out;
        },
        py::arg("config"), py::arg("base_dir") = "");
    m.def(
        "compare",
        [](const std::vector<std::string>& dirs, const std::string& metric) {
            py::list rows;
            for (const CompareRow& r : compare_cmd(dirs, parse_compare_metric(metric))) {
                py::dict d;
                d["run"] = r.run;
                d["optimizer"] = r.optimizer;
                d["mean"] = r.mean;
                d["std"] = r.stddev;
                d["values"] = r.values;
                rows.append(d);
            }
            return rows;
        },
        py::arg("dirs"), py::arg("metric") = "final-max-loss");
    m.def(
        "front",
        [](const std::vector<std::string>& dirs, const std::string& out) {
            const FrontSummary s = front_cmd(dirs, out);
            py::dict d;
            d["reference"] = s.reference;
            d["hypervolume"] = s.hypervolume;
            return d;
        },
        py::arg("dirs"), py::arg("out"));

    m.def(
        "run_check",
        [](int id, const std::string& scratch, std::size_t threads) {
            CheckResult r;
            {
                py::gil_scoped_release release;
                r = run_check(id, {scratch, threads});
            }
            py::dict d;
            d["id"] = r.id;
            d["title"] = r.title;
            d["passed"] = r.passed;
            d["detail"] = r.detail;
            d["seconds"] = r.seconds;
            return d;
        },
        py::arg("id"), py::arg("scratch") = "", py::arg("threads") = 1);
    m.def("check_title", &check_title);
    m.attr("CHECK_COUNT") = kCheckCount;
}
