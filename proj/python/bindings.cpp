#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "irltrack/cli.hpp"
#include "irltrack/config.hpp"
#include "irltrack/critic.hpp"
#include "irltrack/errors.hpp"
#include "irltrack/identifier.hpp"
#include "irltrack/jacobi.hpp"
#include "irltrack/models.hpp"
#include "irltrack/policy.hpp"
#include "irltrack/sim.hpp"

namespace py = pybind11;
using namespace irltrack;
using nlohmann::json;

namespace {

ExperimentConfig config_from(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed JSON: ") + e.what());
  }
  return parse_config(j);
}

// Columns of every row as 1-D arrays, keyed like run.csv.
py::dict run_arrays(const SimConfig& cfg, bool with_rows) {
  std::vector<RunRow> rows;
  Metrics m;
  {
    py::gil_scoped_release release;
    m = run(cfg, with_rows ? RowSink([&](const RunRow& r) { rows.push_back(r); }) : RowSink{});
  }
  py::dict out;
  out["metrics"] = py::module_::import("json").attr("loads")(metrics_json(m).dump());
  if (!with_rows) return out;
  const Eigen::Index n = static_cast<Eigen::Index>(rows.size());
  auto column = [&](auto get) {
    Eigen::VectorXd v(n);
    for (Eigen::Index i = 0; i < n; ++i) v(i) = get(rows[static_cast<std::size_t>(i)]);
    return v;
  };
  py::dict cols;
  cols["t"] = column([](const RunRow& r) { return r.t; });
  cols["x1"] = column([](const RunRow& r) { return r.x1; });
  cols["x2"] = column([](const RunRow& r) { return r.x2; });
  cols["x2d"] = column([](const RunRow& r) { return r.x2d; });
  cols["u"] = column([](const RunRow& r) { return r.u; });
  cols["e_hjb"] = column([](const RunRow& r) { return r.e_hjb; });
  cols["sigma"] = column([](const RunRow& r) { return r.sigma; });
  cols["g_tilde_norm"] = column([](const RunRow& r) { return r.g_tilde_norm; });
  cols["lambda_min_P"] = column([](const RunRow& r) { return r.lambda_min_P; });
  Eigen::MatrixXd W(n, rows.empty() ? 0 : rows.front().W.size());
  for (Eigen::Index i = 0; i < n; ++i) W.row(i) = rows[static_cast<std::size_t>(i)].W.transpose();
  cols["W"] = W;
  out["rows"] = cols;
  return out;
}

}  // namespace

PYBIND11_MODULE(_irltrack, m) {
  m.doc() = "Identifier-aided critic-only IRL tracking simulator";

  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<DomainError>(m, "DomainError", PyExc_ValueError);
  py::register_exception<IoError>(m, "IoError", PyExc_OSError);
  py::register_exception<NumericalFailure>(m, "NumericalFailure", PyExc_ArithmeticError);

  m.def("default_config", [] { return serialize(ExperimentConfig{}).dump(); },
        "Fully explicit default config as a JSON string.");
  m.def("normalize_config", [](const std::string& text) { return serialize(config_from(text)).dump(); },
        py::arg("config_json"), "Validate a config and return its explicit form.");
  m.def(
      "run",
      [](const std::string& text, bool rows) { return run_arrays(config_from(text).sim, rows); },
      py::arg("config_json"), py::arg("rows") = true);
  m.def(
      "run_to_dir",
      [](const std::string& text, const std::string& out) {
        const ExperimentConfig cfg = config_from(text);
        Metrics metrics;
        {
          py::gil_scoped_release release;
          metrics = cmd_run(cfg, out);
        }
        return metrics_json(metrics).dump();
      },
      py::arg("config_json"), py::arg("out_dir"));
  m.def(
      "ablate",
      [](const std::string& text, const std::string& variants_text, const std::string& out, std::size_t workers) {
        const ExperimentConfig base = config_from(text);
        const auto variants = parse_variants(json::parse(variants_text));
        std::vector<AblationRow> rows;
        {
          py::gil_scoped_release release;
          rows = cmd_ablate(base, variants, out, workers == 0 ? worker_count() : workers);
        }
        py::list result;
        for (const auto& r : rows) {
          py::dict d;
          d["variant"] = r.variant;
          d["status"] = r.status;
          d["message"] = r.message;
          d["metrics"] = r.metrics ? py::module_::import("json").attr("loads")(metrics_json(*r.metrics).dump())
                                   : py::object(py::none());
          result.append(d);
        }
        return result;
      },
      py::arg("config_json"), py::arg("variants_json"), py::arg("out_dir"), py::arg("workers") = 0);
  m.def("plot", &cmd_plot, py::arg("run_dir"));

  m.def(
      "plant_derivative",
      [](const Eigen::Vector2d& x, double u, double mass, double spring, double damping) {
        const auto d = plant_derivative({x(0), x(1)}, u, {mass, spring, damping});
        return Eigen::Vector2d(d.x1, d.x2);
      },
      py::arg("x"), py::arg("u"), py::arg("mass"), py::arg("spring"), py::arg("damping"));
  m.def("min_eig_sym", [](const Eigen::MatrixXd& a) { return min_eig_sym(a); }, py::arg("a"));
  m.def("symmetric_eigenvalues", [](const Eigen::MatrixXd& a) { return symmetric_eigenvalues(a); }, py::arg("a"));
  m.def(
      "control",
      [](const Eigen::VectorXd& t, double u_max, const Eigen::VectorXd& R) { return control(t, SaturationSpec(u_max, R)); },
      py::arg("tau"), py::arg("u_max"), py::arg("R"));
  m.def(
      "utility_closed",
      [](const Eigen::VectorXd& t, double u_max, const Eigen::VectorXd& R) {
        return utility_closed(t, SaturationSpec(u_max, R));
      },
      py::arg("tau"), py::arg("u_max"), py::arg("R"));
  m.def(
      "utility_quadrature",
      [](const Eigen::VectorXd& u, double u_max, const Eigen::VectorXd& R) {
        return utility_quadrature(u, SaturationSpec(u_max, R));
      },
      py::arg("u"), py::arg("u_max"), py::arg("R"));
  m.def("uub_gamma", &uub_gamma, py::arg("gamma1"));
  m.def("critic_basis", [](const Eigen::Vector2d& z) { return CriticBasis::spring_damper().theta(z); }, py::arg("z"));
  m.def("normalizers", [](const Eigen::VectorXd& d) {
    const auto n = normalizers(d);
    return py::make_tuple(n.m_s, n.phi, n.theta_bar);
  }, py::arg("dtheta"));
}
