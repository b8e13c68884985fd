#include "swarmdef/ocp_solver.hpp"

#include "swarmdef/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace swarmdef {

void OptimizationConfig::validate() const {
  if (max_iterations < 0) throw ConfigError("optimization.max_iterations must be >= 0");
  if (!(gradient_tolerance > 0.0)) throw ConfigError("optimization.gradient_tolerance must be > 0");
  if (!(armijo > 0.0 && armijo < 1.0)) throw ConfigError("optimization.armijo must be in (0,1)");
  if (!(backtrack > 0.0 && backtrack < 1.0)) throw ConfigError("optimization.backtrack must be in (0,1)");
  if (max_backtracks < 1) throw ConfigError("optimization.max_backtracks must be >= 1");
  if (segments < 2) throw ConfigError("optimization.segments must be >= 2");
}

std::string to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::Converged: return "converged";
    case SolveStatus::IterationLimit: return "iteration_limit";
    case SolveStatus::LineSearchStalled: return "line_search_stalled";
  }
  return "unknown";
}

std::vector<Vec3> node_gradient(const ControlSchedule& ctrl, const std::vector<NodeState>& states,
                                const DefenderPath& path, const NodeDynamics& dyn, double weight) {
  const std::size_t K = static_cast<std::size_t>(ctrl.defenders);
  const double h = path.dt;
  std::vector<Vec3> grad(ctrl.knots.size(), Vec3::Zero());

  NodeState mu = states.back().zeros_like();
  mu.survival.P[0] = -weight;  // d(weight * (1 - P0)) / dP0
  std::vector<Vec3> mu_y(K, Vec3::Zero());

  std::vector<Vec3> ly1(K), ly2(K), ly3(K), ly4(K);
  for (std::size_t n = states.size() - 1; n-- > 0;) {
    const double t = static_cast<double>(n) * h;
    const NodeState& s = states[n];

    // Recompute the forward stages of this step.
    const NodeState k1 = node_rhs(t, s, path.y[n], dyn);
    NodeState z2 = s;
    z2.axpy(0.5 * h, k1);
    const NodeState k2 = node_rhs(t + 0.5 * h, z2, path.y2[n], dyn);
    NodeState z3 = s;
    z3.axpy(0.5 * h, k2);
    const NodeState k3 = node_rhs(t + 0.5 * h, z3, path.y3[n], dyn);
    NodeState z4 = s;
    z4.axpy(h, k3);

    for (auto* v : {&ly1, &ly2, &ly3, &ly4}) std::fill(v->begin(), v->end(), Vec3::Zero());

    NodeState a = mu.zeros_like();
    a.axpy(h / 6.0, mu);
    const NodeState l4 = node_rhs_vjp(t + h, z4, path.y4[n], dyn, a, ly4);
    for (std::size_t k = 0; k < K; ++k) ctrl.scatter(static_cast<int>(k), t + h, (h / 6.0) * mu_y[k], grad);

    a = mu.zeros_like();
    a.axpy(h / 3.0, mu);
    a.axpy(h, l4);
    const NodeState l3 = node_rhs_vjp(t + 0.5 * h, z3, path.y3[n], dyn, a, ly3);

    a = mu.zeros_like();
    a.axpy(h / 3.0, mu);
    a.axpy(0.5 * h, l3);
    const NodeState l2 = node_rhs_vjp(t + 0.5 * h, z2, path.y2[n], dyn, a, ly2);

    for (std::size_t k = 0; k < K; ++k) {
      const Vec3 g_mid = (2.0 * h / 3.0) * mu_y[k] + 0.5 * h * ly3[k] + h * ly4[k];
      ctrl.scatter(static_cast<int>(k), t + 0.5 * h, g_mid, grad);
      const Vec3 g_start = (h / 6.0) * mu_y[k] + 0.5 * h * ly2[k];
      ctrl.scatter(static_cast<int>(k), t, g_start, grad);
    }

    a = mu.zeros_like();
    a.axpy(h / 6.0, mu);
    a.axpy(0.5 * h, l2);
    const NodeState l1 = node_rhs_vjp(t, s, path.y[n], dyn, a, ly1);

    mu.axpy(1.0, l1);
    mu.axpy(1.0, l2);
    mu.axpy(1.0, l3);
    mu.axpy(1.0, l4);
    for (std::size_t k = 0; k < K; ++k) mu_y[k] += ly1[k] + ly2[k] + ly3[k] + ly4[k];
  }
  return grad;
}

ObjectiveEval evaluate_objective(const ControlSchedule& ctrl, const QuadratureRule& rule,
                                 const ScenarioConfig& cfg, int jobs) {
  const Trajectory traj = simulate_ensemble(ctrl, rule, cfg, jobs);
  const std::size_t M = rule.size();
  std::vector<std::vector<Vec3>> per_node(M);
  parallel_for(M, jobs, [&](std::size_t i) {
    per_node[i] = node_gradient(ctrl, traj.nodes[i], traj.defenders, bind_node(cfg, rule.nodes[i]),
                                rule.weights[i]);
  });

  ObjectiveEval out;
  out.gradient.assign(ctrl.knots.size(), Vec3::Zero());
  for (std::size_t i = 0; i < M; ++i) {
    out.node_costs.push_back(terminal_cost(traj.nodes[i].back()));
    for (std::size_t q = 0; q < out.gradient.size(); ++q) out.gradient[q] += per_node[i][q];
  }
  out.value = integrate(rule, out.node_costs);
  return out;
}

double ensemble_objective(const ControlSchedule& ctrl, const QuadratureRule& rule,
                          const ScenarioConfig& cfg, int jobs) {
  const Trajectory traj = simulate_ensemble(ctrl, rule, cfg, jobs);
  std::vector<double> costs;
  costs.reserve(rule.size());
  for (const auto& states : traj.nodes) costs.push_back(terminal_cost(states.back()));
  return integrate(rule, costs);
}

std::vector<Vec3> objective_gradient(const ControlSchedule& ctrl, const QuadratureRule& rule,
                                     const ScenarioConfig& cfg, int jobs) {
  return evaluate_objective(ctrl, rule, cfg, jobs).gradient;
}

ControlSchedule project_control(const ControlSchedule& ctrl, double u_max) {
  ControlSchedule out = ctrl;
  for (Vec3& u : out.knots) {
    const double norm = u.norm();
    if (norm > u_max) u *= u_max / norm;
  }
  return out;
}

namespace {

double dot(const std::vector<Vec3>& a, const std::vector<Vec3>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i].dot(b[i]);
  return s;
}

ControlSchedule projected_step(const ControlSchedule& u, const std::vector<Vec3>& g, double step,
                               double u_max, int dim) {
  ControlSchedule trial = u;
  for (std::size_t q = 0; q < trial.knots.size(); ++q) {
    trial.knots[q] -= step * g[q];
    if (dim == 2) trial.knots[q].z() = 0.0;
  }
  return project_control(trial, u_max);
}

double projected_gradient_norm(const ControlSchedule& u, const std::vector<Vec3>& g, double u_max,
                               int dim) {
  const ControlSchedule p = projected_step(u, g, 1.0, u_max, dim);
  double s = 0.0;
  for (std::size_t q = 0; q < u.knots.size(); ++q) s += (p.knots[q] - u.knots[q]).squaredNorm();
  return std::sqrt(s);
}

}  // namespace

namespace {

bool all_finite(const std::vector<Vec3>& g) {
  for (const Vec3& v : g) {
    if (!v.allFinite()) return false;
  }
  return true;
}

}  // namespace

OptimalSolution optimize(const ScenarioConfig& cfg, const QuadratureRule& rule,
                         const OptimizationConfig& opt) {
  cfg.validate();
  opt.validate();

  ControlSchedule u = ControlSchedule::zeros(cfg.t_final, opt.segments, cfg.defenders);
  if (!opt.initial_knots.empty()) {
    if (opt.initial_knots.size() != u.knots.size()) {
      throw ConfigError("optimization.initial_knots must have defenders * (segments + 1) entries");
    }
    u.knots = opt.initial_knots;
  }
  if (cfg.dim == 2) {
    for (Vec3& k : u.knots) k.z() = 0.0;
  }
  u = project_control(u, cfg.u_max);

  OptimalSolution sol;
  sol.rule = rule;
  ObjectiveEval cur = evaluate_objective(u, rule, cfg, opt.jobs);
  if (!std::isfinite(cur.value) || !all_finite(cur.gradient)) {
    throw SimulationError("non-finite objective or gradient at the initial control");
  }
  double step = 0.0;
  {
    double gmax = 0.0;
    for (const Vec3& g : cur.gradient) gmax = std::max(gmax, g.cwiseAbs().maxCoeff());
    step = gmax > 0.0 ? cfg.u_max / gmax : 1.0;
  }

  std::vector<Vec3> prev_u;
  std::vector<Vec3> prev_g;
  sol.status = SolveStatus::IterationLimit;
  int it = 0;
  for (;; ++it) {
    const double pg = projected_gradient_norm(u, cur.gradient, cfg.u_max, cfg.dim);
    sol.log.push_back({it, cur.value, pg, it == 0 ? 0.0 : step});
    sol.gradient_norm = pg;
    if (pg <= opt.gradient_tolerance) {
      sol.status = SolveStatus::Converged;
      break;
    }
    if (it >= opt.max_iterations) break;

    // Barzilai-Borwein trial step from the last accepted move.
    if (!prev_u.empty()) {
      double ss = 0.0;
      double sy = 0.0;
      for (std::size_t q = 0; q < u.knots.size(); ++q) {
        const Vec3 du = u.knots[q] - prev_u[q];
        const Vec3 dg = cur.gradient[q] - prev_g[q];
        ss += du.squaredNorm();
        sy += du.dot(dg);
      }
      step = sy > 0.0 ? ss / sy : step * 2.0;
    }
    step = std::clamp(step, 1e-10, 1e10);

    bool accepted = false;
    ControlSchedule trial;
    ObjectiveEval next;
    for (int b = 0; b < opt.max_backtracks; ++b) {
      trial = projected_step(u, cur.gradient, step, cfg.u_max, cfg.dim);
      std::vector<Vec3> d(u.knots.size());
      for (std::size_t q = 0; q < d.size(); ++q) d[q] = trial.knots[q] - u.knots[q];
      const double decrease = dot(cur.gradient, d);
      bool ok = true;
      try {
        next = evaluate_objective(trial, rule, cfg, opt.jobs);
        ok = std::isfinite(next.value) && all_finite(next.gradient);
      } catch (const SimulationError&) {
        ok = false;  // overshoot into a region the integrator cannot resolve
      }
      if (ok && next.value <= cur.value + opt.armijo * decrease) {
        accepted = true;
        break;
      }
      step *= opt.backtrack;
    }
    if (!accepted) {
      sol.status = SolveStatus::LineSearchStalled;
      break;
    }
    prev_u = u.knots;
    prev_g = cur.gradient;
    u = std::move(trial);
    cur = std::move(next);
  }

  sol.control = std::move(u);
  sol.objective_value = cur.value;
  sol.iterations = it;
  return sol;
}

}  // namespace swarmdef
