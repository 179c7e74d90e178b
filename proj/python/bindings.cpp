#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "ospde/capacity.hpp"
#include "ospde/config.hpp"
#include "ospde/driver.hpp"

namespace py = pybind11;
using namespace pybind11::literals;
using namespace ospde;

namespace {

py::object from_json(const nlohmann::ordered_json& j) {
    return py::module_::import("json").attr("loads")(j.dump());
}

py::array_t<double> stack(const FieldPath& path, std::size_t nodes) {
    py::array_t<double> out({path.size(), nodes});
    auto view = out.mutable_unchecked<2>();
    for (std::size_t k = 0; k < path.size(); ++k) {
        for (std::size_t n = 0; n < nodes; ++n) view(k, n) = path[k][n];
    }
    return out;
}

py::dict simulate(const ExperimentConfig& config, std::uint64_t path) {
    const SPDEProblem p = build_problem(config);
    py::gil_scoped_release release;
    auto [sol, nu] = Stepper(p).solve(config.scheme, path);
    py::gil_scoped_acquire acquire;

    const std::size_t n = p.grid.node_count();
    py::array_t<double> x({n, p.grid.dim()}), t(p.time.steps + 1);
    auto xv = x.mutable_unchecked<2>();
    for (std::size_t i = 0; i < n; ++i) {
        const Point c = p.grid.coordinates(i);
        for (std::size_t a = 0; a < p.grid.dim(); ++a) xv(i, a) = c[a];
    }
    auto tv = t.mutable_unchecked<1>();
    for (std::size_t k = 0; k <= p.time.steps; ++k) tv(k) = p.time.time(k);

    py::dict out("t"_a = t, "x"_a = x, "u"_a = stack(sol.u, n), "nu"_a = stack(nu.mass, n));
    out["obstacle"] = sol.obstacle.empty() ? py::object(py::none()) : py::object(stack(sol.obstacle, n));
    return out;
}

py::dict capacity(const ExperimentConfig& config) {
    const CapacityEstimate c = run_capacity(config);
    py::list levels;
    for (const auto& l : c.levels) {
        levels.append(py::dict("nodes"_a = l.nodes, "steps"_a = l.steps, "penalty"_a = l.penalty, "mass"_a = l.mass,
                               "error_indicator"_a = l.error_indicator, "mass_energy_ratio"_a = l.mass_energy_ratio,
                               "mass_outside"_a = l.mass_outside));
    }
    return py::dict("value"_a = c.value, "monotone"_a = c.monotone, "extrapolated"_a = c.extrapolated,
                    "levels"_a = levels);
}

py::dict convergence(const ExperimentConfig& config) {
    const ConvergenceResult r = run_convergence(config);
    return py::dict("reference"_a = r.reference, "steps"_a = r.steps, "dt"_a = r.dt, "error"_a = r.error,
                    "order"_a = r.order);
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Obstacle problems for parabolic SPDEs";

    py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);

    py::class_<ExperimentConfig>(m, "Config")
        .def_readwrite("seed", &ExperimentConfig::seed)
        .def_readwrite("paths", &ExperimentConfig::paths)
        .def_readwrite("out", &ExperimentConfig::out)
        .def_readwrite("workers", &ExperimentConfig::workers)
        .def_readwrite("checks", &ExperimentConfig::checks)
        .def("to_dict", [](const ExperimentConfig& c) { return from_json(to_json(c)); })
        .def("manifest", [](const ExperimentConfig& c, const std::string& sub) { return from_json(make_manifest(c, sub)); },
             "subcommand"_a = "simulate");

    m.def("load_config", &parse_config, "path"_a);
    m.def("parse_config", &parse_config_text, "text"_a);

    m.def("simulate", &simulate, "config"_a, "path"_a = 0);
    m.def("verify", [](const ExperimentConfig& c) { return from_json(run_verify(c).to_json()); }, "config"_a);
    m.def("capacity", &capacity, "config"_a);
    m.def("convergence", &convergence, "config"_a);
    m.def("run", [](const ExperimentConfig& c, const std::string& sub) {
        std::ostringstream log;
        const int code = run(c, sub, log);
        return py::make_tuple(code, log.str());
    }, "config"_a, "subcommand"_a);

    m.def("check_constants", [](double lambda, double alpha, double beta) {
        const AssumptionReport r = check_constants(lambda, alpha, beta);
        return py::dict("contraction_lhs"_a = r.contraction_lhs, "h_contraction"_a = r.h_contraction,
                        "mp_lhs"_a = r.mp_lhs, "mp_condition"_a = r.mp_condition);
    }, "lam"_a, "alpha"_a, "beta"_a);
}
