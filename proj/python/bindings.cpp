#include "swarmdef/config.hpp"
#include "swarmdef/io.hpp"
#include "swarmdef/robustness.hpp"

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

namespace py = pybind11;
using namespace swarmdef;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

Array knots_array(const ControlSchedule& c) {
  Array a({c.defenders, c.knot_count(), 3});
  auto m = a.mutable_unchecked<3>();
  for (int k = 0; k < c.defenders; ++k)
    for (int s = 0; s < c.knot_count(); ++s)
      for (int d = 0; d < 3; ++d) m(k, s, d) = c.knot(k, s)[d];
  return a;
}

Array vec3_array(const std::vector<Vec3>& v, int defenders, int knots) {
  Array a({defenders, knots, 3});
  auto m = a.mutable_unchecked<3>();
  for (int k = 0; k < defenders; ++k)
    for (int s = 0; s < knots; ++s)
      for (int d = 0; d < 3; ++d) m(k, s, d) = v[static_cast<std::size_t>(k) * knots + s][d];
  return a;
}

ControlSchedule control_from_array(double t_final, const Array& knots) {
  if (knots.ndim() != 3 || knots.shape(2) != 3) {
    throw ConfigError("knots must have shape (defenders, segments + 1, 3)");
  }
  const int K = static_cast<int>(knots.shape(0));
  const int S = static_cast<int>(knots.shape(1)) - 1;
  ControlSchedule c = ControlSchedule::zeros(t_final, S, K);
  auto m = knots.unchecked<3>();
  for (int k = 0; k < K; ++k)
    for (int s = 0; s <= S; ++s) c.knot(k, s) = Vec3(m(k, s, 0), m(k, s, 1), m(k, s, 2));
  return c;
}

RunConfig with_overrides(RunConfig cfg, std::optional<int> nodes, std::optional<std::string> scheme) {
  if (nodes) cfg.nodes = *nodes;
  if (scheme) cfg.scheme = parse_scheme(*scheme);
  cfg.validate();
  return cfg;
}

py::dict solution_dict(const OptimalSolution& sol) {
  Array log({static_cast<py::ssize_t>(sol.log.size()), py::ssize_t{4}});
  auto m = log.mutable_unchecked<2>();
  for (std::size_t i = 0; i < sol.log.size(); ++i) {
    m(i, 0) = sol.log[i].iteration;
    m(i, 1) = sol.log[i].objective;
    m(i, 2) = sol.log[i].gradient_norm;
    m(i, 3) = sol.log[i].step;
  }
  py::dict d;
  d["control"] = sol.control;
  d["objective"] = sol.objective_value;
  d["gradient_norm"] = sol.gradient_norm;
  d["iterations"] = sol.iterations;
  d["status"] = to_string(sol.status);
  d["log"] = log;
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Defender control optimization against an attacking swarm";
  m.attr("__version__") = SWARMDEF_VERSION;

  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<SimulationError>(m, "SimulationError", PyExc_RuntimeError);

  py::class_<RunConfig>(m, "Config")
      .def_static("from_json", &parse_config, py::arg("text"))
      .def_static("load", &load_config, py::arg("path"))
      .def("to_json", &dump_config)
      .def_property_readonly("hash", &config_hash)
      .def_readwrite("nodes", &RunConfig::nodes)
      .def_readwrite("sweep_grid", &RunConfig::sweep_grid)
      .def_property(
          "scheme", [](const RunConfig& c) { return to_string(c.scheme); },
          [](RunConfig& c, const std::string& s) { c.scheme = parse_scheme(s); })
      .def_property(
          "max_iterations", [](const RunConfig& c) { return c.optimization.max_iterations; },
          [](RunConfig& c, int n) { c.optimization.max_iterations = n; })
      .def_property(
          "gradient_tolerance", [](const RunConfig& c) { return c.optimization.gradient_tolerance; },
          [](RunConfig& c, double t) { c.optimization.gradient_tolerance = t; })
      .def_property_readonly("attackers", [](const RunConfig& c) { return c.scenario.attackers; })
      .def_property_readonly("defenders", [](const RunConfig& c) { return c.scenario.defenders; })
      .def_property_readonly("t_final", [](const RunConfig& c) { return c.scenario.t_final; })
      .def_property_readonly("segments", [](const RunConfig& c) { return c.optimization.segments; })
      .def_property_readonly("uncertain", [](const RunConfig& c) {
        const auto& u = c.scenario.uncertain;
        return py::make_tuple(u.name, u.lower, u.upper);
      })
      .def("quadrature", [](const RunConfig& c) {
        const auto r = c.rule();
        return py::make_tuple(r.nodes, r.weights);
      })
      .def("__repr__", [](const RunConfig& c) {
        return "<swarmdef.Config " + std::string(c.scenario.model.name()) + " N=" +
               std::to_string(c.scenario.attackers) + " K=" + std::to_string(c.scenario.defenders) +
               " M=" + std::to_string(c.nodes) + ">";
      });

  py::class_<ControlSchedule>(m, "Control")
      .def(py::init(&control_from_array), py::arg("t_final"), py::arg("knots"))
      .def_static("zeros", &ControlSchedule::zeros, py::arg("t_final"), py::arg("segments"),
                  py::arg("defenders"))
      .def_static("from_csv", [](const std::string& text) {
        std::istringstream in(text);
        return read_control_csv(in);
      })
      .def_static("load", &load_control_csv, py::arg("path"))
      .def("to_csv", [](const ControlSchedule& c) {
        std::ostringstream out;
        write_control_csv(out, c);
        return out.str();
      })
      .def_readonly("t_final", &ControlSchedule::t_final)
      .def_readonly("segments", &ControlSchedule::segments)
      .def_readonly("defenders", &ControlSchedule::defenders)
      .def_property_readonly("knots", &knots_array)
      .def("at", [](const ControlSchedule& c, double t) {
        const auto u = c.at(t);
        Array a({static_cast<py::ssize_t>(u.size()), py::ssize_t{3}});
        auto v = a.mutable_unchecked<2>();
        for (std::size_t k = 0; k < u.size(); ++k)
          for (int d = 0; d < 3; ++d) v(k, d) = u[k][d];
        return a;
      });

  m.def("quadrature_rule",
        [](const std::string& scheme, int M, double lower, double upper, std::optional<double> nominal) {
          const auto r = build_rule(parse_scheme(scheme), M,
                                    ParamDomain{"theta", lower, upper, PriorKind::Uniform, nominal});
          return py::make_tuple(r.nodes, r.weights);
        },
        py::arg("scheme"), py::arg("M"), py::arg("lower"), py::arg("upper"),
        py::arg("nominal") = py::none(), "Quadrature nodes and prior-folded weights.");

  m.def("optimize",
        [](const RunConfig& cfg, std::optional<int> nodes, std::optional<std::string> scheme, int jobs) {
          const RunConfig c = with_overrides(cfg, nodes, scheme);
          OptimizationConfig opt = c.optimization;
          opt.jobs = jobs;
          OptimalSolution sol;
          {
            py::gil_scoped_release release;
            sol = optimize(c.scenario, c.rule(), opt);
          }
          return solution_dict(sol);
        },
        py::arg("config"), py::arg("nodes") = py::none(), py::arg("scheme") = py::none(),
        py::arg("jobs") = 1, "Optimize defender controls; returns a dict with control and log.");

  m.def("objective",
        [](const RunConfig& cfg, const ControlSchedule& ctrl, std::optional<int> nodes, int jobs) {
          const RunConfig c = with_overrides(cfg, nodes, std::nullopt);
          ObjectiveEval ev;
          {
            py::gil_scoped_release release;
            ev = evaluate_objective(ctrl, c.rule(), c.scenario, jobs);
          }
          return py::make_tuple(ev.value, vec3_array(ev.gradient, ctrl.defenders, ctrl.knot_count()),
                                ev.node_costs);
        },
        py::arg("config"), py::arg("control"), py::arg("nodes") = py::none(), py::arg("jobs") = 1,
        "Ensemble objective, its knot gradient and the per-node costs.");

  m.def("simulate",
        [](const RunConfig& cfg, const ControlSchedule& ctrl, std::optional<int> nodes, int jobs) {
          const RunConfig c = with_overrides(cfg, nodes, std::nullopt);
          Trajectory traj;
          {
            py::gil_scoped_release release;
            traj = simulate_ensemble(ctrl, c.rule(), c.scenario, jobs);
          }
          const auto M = static_cast<py::ssize_t>(traj.node_count());
          const auto T = static_cast<py::ssize_t>(traj.times.size());
          const auto N = static_cast<py::ssize_t>(c.scenario.attackers);
          const auto K = static_cast<py::ssize_t>(c.scenario.defenders);
          Array x({M, T, N, py::ssize_t{3}}), Q({M, T, N}), P({M, T, K + 1}), y({T, K, py::ssize_t{3}});
          auto xm = x.mutable_unchecked<4>();
          auto qm = Q.mutable_unchecked<3>();
          auto pm = P.mutable_unchecked<3>();
          auto ym = y.mutable_unchecked<3>();
          for (py::ssize_t n = 0; n < T; ++n) {
            for (py::ssize_t k = 0; k < K; ++k)
              for (int d = 0; d < 3; ++d) ym(n, k, d) = traj.defenders.y[n][k][d];
            for (py::ssize_t i = 0; i < M; ++i) {
              const NodeState& s = traj.nodes[i][n];
              for (py::ssize_t j = 0; j < N; ++j) {
                for (int d = 0; d < 3; ++d) xm(i, n, j, d) = s.x[j][d];
                qm(i, n, j) = s.survival.Q[j];
              }
              for (py::ssize_t k = 0; k <= K; ++k) pm(i, n, k) = s.survival.P[k];
            }
          }
          py::dict d;
          d["t"] = traj.times;
          d["thetas"] = traj.thetas;
          d["attackers"] = x;
          d["defenders"] = y;
          d["Q"] = Q;
          d["P"] = P;
          return d;
        },
        py::arg("config"), py::arg("control"), py::arg("nodes") = py::none(), py::arg("jobs") = 1,
        "Forward ensemble simulation; P[..., 0] is the HVU survival probability.");

  m.def("hamiltonian",
        [](const RunConfig& cfg, const ControlSchedule& ctrl, std::optional<int> nodes) {
          const RunConfig c = with_overrides(cfg, nodes, std::nullopt);
          HamiltonianProfile p;
          {
            py::gil_scoped_release release;
            const QuadratureRule rule = c.rule();
            const Trajectory traj = simulate_ensemble(ctrl, rule, c.scenario);
            const CostateEnsemble lam = integrate_costates(traj, ctrl, rule, c.scenario);
            p = hamiltonian_profile(traj, lam, ctrl, rule, c.scenario);
          }
          py::dict d;
          d["t"] = p.times;
          d["H"] = p.values;
          d["objective"] = p.objective;
          d["max_abs"] = p.max_abs;
          d["max_deviation"] = p.max_deviation;
          return d;
        },
        py::arg("config"), py::arg("control"), py::arg("nodes") = py::none(),
        "Hamiltonian along the trajectory driven by control.");

  m.def("sweep",
        [](const RunConfig& cfg, const std::vector<ControlSchedule>& controls,
           std::optional<std::string> param, std::optional<double> lower, std::optional<double> upper,
           std::optional<int> grid, int jobs) {
          ParamDomain dom = cfg.scenario.uncertain;
          if (param && *param != dom.name) {
            if (!lower || !upper) throw ConfigError("lower and upper are required for another parameter");
            dom = ParamDomain{*param, *lower, *upper, PriorKind::Uniform, std::nullopt};
          }
          if (lower) dom.lower = *lower;
          if (upper) dom.upper = *upper;
          if (dom.nominal && !dom.contains(*dom.nominal)) dom.nominal.reset();
          std::vector<std::string> labels;
          if (controls.size() == 2) labels = {"nominal", "robust"};
          else for (std::size_t i = 0; i < controls.size(); ++i) labels.push_back("c" + std::to_string(i));
          SweepResult r;
          {
            py::gil_scoped_release release;
            r = sweep(controls, labels, dom, grid.value_or(cfg.sweep_grid), cfg.scenario, jobs);
          }
          py::dict d;
          d["parameter"] = r.parameter;
          d["theta"] = r.thetas;
          d["labels"] = r.labels;
          d["cost"] = r.costs;
          d["errors"] = r.errors;
          return d;
        },
        py::arg("config"), py::arg("controls"), py::arg("param") = py::none(),
        py::arg("lower") = py::none(), py::arg("upper") = py::none(), py::arg("grid") = py::none(),
        py::arg("jobs") = 1, "Terminal cost of each control over a parameter grid.");

  m.def("hamiltonian_convergence",
        [](const RunConfig& cfg, const std::vector<int>& nodes_list) {
          std::vector<ConvergenceRow> rows;
          {
            py::gil_scoped_release release;
            rows = hamiltonian_convergence(cfg.scenario, cfg.optimization, nodes_list, cfg.scheme);
          }
          py::list out;
          for (const auto& r : rows) {
            py::dict d;
            d["M"] = r.M;
            d["max_abs_H"] = r.max_abs_H;
            d["max_deviation_H"] = r.max_deviation_H;
            d["objective"] = r.objective;
            d["iterations"] = r.iterations;
            d["status"] = r.status;
            out.append(d);
          }
          return out;
        },
        py::arg("config"), py::arg("nodes_list"), "Optimize and summarize H for each node count.");
}
