#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <sstream>

#include "verifem/adapt.hpp"
#include "verifem/runner.hpp"

namespace py = pybind11;
using namespace verifem;

namespace {

ProblemSetup named_problem(const std::string& name, int n) {
  if (n < 1) throw std::invalid_argument("n must be positive");
  if (name == "sin_sin") return {sin_sin_problem(), unit_square_mesh(n), false};
  if (name == "fig1_square") return {fig1_problem(), unit_square_mesh(n, "fig1"), false};
  if (name == "lshape_singular") return {lshape_problem(), l_shape_mesh(n), false};
  throw std::invalid_argument("unknown problem: " + name);
}

py::dict report_dict(const EstimateReport& r) {
  py::dict d;
  d["estimator"] = r.estimator;
  d["eta"] = r.eta;
  d["kind"] = to_string(r.kind);
  d["effectivity"] = r.effectivity ? py::cast(*r.effectivity) : py::none();
  d["backend"] = r.backend;
  d["caveats"] = r.caveats;
  d["indicators"] = r.indicators;
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.attr("estimator_names") = estimator_names();

  m.def(
      "estimate",
      [](const std::string& problem, int n, const std::string& estimator, bool project) {
        ProblemSetup setup = named_problem(problem, n);
        DiffusionProblem p = project ? project_source(setup.problem, setup.mesh) : setup.problem;
        FeFunction u = solve(p, make_space(setup.mesh));
        py::dict out = report_dict(run_estimator(estimator, p, u));
        out["elements"] = setup.mesh->num_elements();
        return out;
      },
      py::arg("problem"), py::arg("n"), py::arg("estimator"), py::arg("project_source") = false);

  m.def(
      "check_config",
      [](const std::string& text) {
        try {
          parse_config_text(text);
        } catch (const ConfigError& e) {
          return py::make_tuple(false, e.line(), std::string(e.what()));
        }
        return py::make_tuple(true, 0, std::string());
      },
      py::arg("text"));

  m.def(
      "run",
      [](const std::string& command, const std::filesystem::path& config, const std::filesystem::path& out_dir) {
        auto cmd = command_from(command);
        if (!cmd) throw std::invalid_argument("unknown command: " + command);
        std::ostringstream err;
        int code = 1;
        try {
          code = verifem::run(*cmd, parse_config(config), out_dir, err);
        } catch (const ConfigError& e) {
          err << e.what() << "\n";
        }
        return py::make_tuple(code, err.str());
      },
      py::arg("command"), py::arg("config"), py::arg("out_dir"));
}
