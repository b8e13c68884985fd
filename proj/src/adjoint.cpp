#include "swarmdef/adjoint.hpp"

#include "swarmdef/parallel.hpp"

#include <cmath>

namespace swarmdef {

std::vector<Vec3> CostateEnsemble::shared_defender_costate(std::size_t n) const {
  std::vector<Vec3> out(defender.empty() ? 0 : defender[0][n].size(), Vec3::Zero());
  for (std::size_t i = 0; i < defender.size(); ++i) {
    for (std::size_t k = 0; k < out.size(); ++k) out[k] += weights[i] * defender[i][n][k];
  }
  return out;
}

NodeState covector_map(const NodeState& lambda_bar, double alpha) {
  if (!(alpha > 0.0)) throw std::invalid_argument("covector_map: weight must be positive");
  NodeState out = lambda_bar.zeros_like();
  for (std::size_t q = 0; q < out.flat_size(); ++q) out.flat(q) = lambda_bar.flat(q) / alpha;
  return out;
}

NodeState covector_unmap(const NodeState& lambda_tilde, double alpha) {
  if (!(alpha > 0.0)) throw std::invalid_argument("covector_unmap: weight must be positive");
  NodeState out = lambda_tilde.zeros_like();
  for (std::size_t q = 0; q < out.flat_size(); ++q) out.flat(q) = lambda_tilde.flat(q) * alpha;
  return out;
}

double covector_map(double lambda_bar, double alpha) {
  if (!(alpha > 0.0)) throw std::invalid_argument("covector_map: weight must be positive");
  return lambda_bar / alpha;
}

double covector_unmap(double lambda_tilde, double alpha) {
  if (!(alpha > 0.0)) throw std::invalid_argument("covector_unmap: weight must be positive");
  return lambda_tilde * alpha;
}

namespace {

struct CostateDerivative {
  NodeState node;
  std::vector<Vec3> defender;
};

CostateDerivative costate_rhs(double t, const NodeState& s, std::span<const Vec3> y,
                              const NodeDynamics& dyn, const NodeState& lambda) {
  CostateDerivative d;
  d.defender.assign(y.size(), Vec3::Zero());
  d.node = node_rhs_vjp(t, s, y, dyn, lambda, d.defender);
  for (std::size_t q = 0; q < d.node.flat_size(); ++q) d.node.flat(q) = -d.node.flat(q);
  for (Vec3& v : d.defender) v = -v;
  return d;
}

// Cubic Hermite midpoint of a step from values and slopes at both ends.
NodeState hermite_mid(const NodeState& a, const NodeState& fa, const NodeState& b,
                      const NodeState& fb, double h) {
  NodeState m = a;
  m.axpy(1.0, b);
  for (std::size_t q = 0; q < m.flat_size(); ++q) m.flat(q) *= 0.5;
  m.axpy(h / 8.0, fa);
  m.axpy(-h / 8.0, fb);
  return m;
}

std::vector<Vec3> hermite_mid(const std::vector<Vec3>& a, const std::vector<Vec3>& fa,
                              const std::vector<Vec3>& b, const std::vector<Vec3>& fb, double h) {
  std::vector<Vec3> m(a.size());
  for (std::size_t k = 0; k < a.size(); ++k) m[k] = 0.5 * (a[k] + b[k]) + (h / 8.0) * (fa[k] - fb[k]);
  return m;
}

}  // namespace

CostateEnsemble integrate_costates(const Trajectory& traj, const ControlSchedule& ctrl,
                                   const QuadratureRule& rule, const ScenarioConfig& cfg,
                                   int jobs) {
  const std::size_t M = traj.node_count();
  const std::size_t steps = traj.steps();
  const std::size_t K = static_cast<std::size_t>(cfg.defenders);
  const double h = cfg.dt;

  CostateEnsemble out;
  out.weights = rule.weights;
  out.node.resize(M);
  out.defender.resize(M);

  parallel_for(M, jobs, [&](std::size_t i) {
    const NodeDynamics dyn = bind_node(cfg, traj.thetas[i]);
    const auto& states = traj.nodes[i];
    auto& lam = out.node[i];
    auto& lam_y = out.defender[i];
    lam.assign(steps + 1, NodeState{});
    lam_y.assign(steps + 1, std::vector<Vec3>(K, Vec3::Zero()));

    NodeState terminal = states.back().zeros_like();
    terminal.survival.P[0] = -1.0;  // d(1 - P0)/dP0
    lam[steps] = terminal;

    NodeState f_next = node_rhs(traj.times[steps], states[steps], traj.defenders.y[steps], dyn);
    std::vector<Vec3> u_next = ctrl.at(traj.times[steps]);

    for (std::size_t n = steps; n-- > 0;) {
      const double t0 = traj.times[n];
      const double t1 = traj.times[n + 1];
      const double tm = t0 + 0.5 * h;
      const NodeState f_cur = node_rhs(t0, states[n], traj.defenders.y[n], dyn);
      const std::vector<Vec3> u_cur = ctrl.at(t0);
      const NodeState s_mid = hermite_mid(states[n], f_cur, states[n + 1], f_next, h);
      const std::vector<Vec3> y_mid =
          hermite_mid(traj.defenders.y[n], u_cur, traj.defenders.y[n + 1], u_next, h);

      const NodeState& L = lam[n + 1];
      const auto k1 = costate_rhs(t1, states[n + 1], traj.defenders.y[n + 1], dyn, L);
      NodeState z = L;
      z.axpy(-0.5 * h, k1.node);
      const auto k2 = costate_rhs(tm, s_mid, y_mid, dyn, z);
      z = L;
      z.axpy(-0.5 * h, k2.node);
      const auto k3 = costate_rhs(tm, s_mid, y_mid, dyn, z);
      z = L;
      z.axpy(-h, k3.node);
      const auto k4 = costate_rhs(t0, states[n], traj.defenders.y[n], dyn, z);

      NodeState next = L;
      next.axpy(-h / 6.0, k1.node);
      next.axpy(-h / 3.0, k2.node);
      next.axpy(-h / 3.0, k3.node);
      next.axpy(-h / 6.0, k4.node);
      if (!next.all_finite()) {
        throw SimulationError("non-finite costate (node " + std::to_string(i) + ")", t0,
                              static_cast<long>(n));
      }
      lam[n] = std::move(next);
      for (std::size_t k = 0; k < K; ++k) {
        lam_y[n][k] = lam_y[n + 1][k] - (h / 6.0) * (k1.defender[k] + 2.0 * k2.defender[k] +
                                                     2.0 * k3.defender[k] + k4.defender[k]);
      }
      f_next = f_cur;
      u_next = u_cur;
    }
  });
  return out;
}

double hamiltonian_at(const Trajectory& traj, const CostateEnsemble& costates,
                      const QuadratureRule& rule, const ScenarioConfig& cfg, std::size_t n,
                      std::span<const Vec3> u) {
  const double t = traj.times[n];
  double H = 0.0;
  for (std::size_t i = 0; i < traj.node_count(); ++i) {
    const NodeDynamics dyn = bind_node(cfg, traj.thetas[i]);
    const NodeState f = node_rhs(t, traj.nodes[i][n], traj.defenders.y[n], dyn);
    double h_i = costates.node[i][n].dot(f);
    for (std::size_t k = 0; k < u.size(); ++k) h_i += costates.defender[i][n][k].dot(u[k]);
    H += rule.weights[i] * h_i;
  }
  return H;
}

HamiltonianProfile hamiltonian_profile(const Trajectory& traj, const CostateEnsemble& costates,
                                       const ControlSchedule& ctrl, const QuadratureRule& rule,
                                       const ScenarioConfig& cfg) {
  HamiltonianProfile p;
  p.times = traj.times;
  p.values.resize(traj.times.size());
  for (std::size_t n = 0; n < traj.times.size(); ++n) {
    const auto u = ctrl.at(traj.times[n]);
    p.values[n] = hamiltonian_at(traj, costates, rule, cfg, n, u);
  }
  std::vector<double> costs;
  for (const auto& states : traj.nodes) costs.push_back(terminal_cost(states.back()));
  p.objective = integrate(rule, costs);

  double sum = 0.0;
  for (double v : p.values) {
    sum += v;
    p.max_abs = std::max(p.max_abs, std::abs(v));
  }
  p.mean = sum / static_cast<double>(p.values.size());
  for (double v : p.values) p.max_deviation = std::max(p.max_deviation, std::abs(v - p.mean));
  return p;
}

DualResidual covector_residual(const Trajectory& traj, const CostateEnsemble& costates,
                               const QuadratureRule& rule, const ScenarioConfig& cfg, int stride,
                               int jobs) {
  const std::size_t M = traj.node_count();
  std::vector<DualResidual> per_node(M);

  parallel_for(M, jobs, [&](std::size_t i) {
    const NodeDynamics dyn = bind_node(cfg, traj.thetas[i]);
    const double alpha = rule.weights[i];
    DualResidual& r = per_node[i];
    for (std::size_t n = 0; n < traj.times.size(); n += static_cast<std::size_t>(std::max(stride, 1))) {
      const double t = traj.times[n];
      const NodeState& s = traj.nodes[i][n];
      const auto& y = traj.defenders.y[n];
      const NodeState lam_bar = covector_unmap(costates.node[i][n], alpha);

      // Collocated costate slope, mapped back: alpha * dlambda~/dt.
      const auto d = costate_rhs(t, s, y, dyn, costates.node[i][n]);
      const NodeState slope = covector_unmap(d.node, alpha);
      std::vector<Vec3> slope_y(d.defender.size());
      for (std::size_t k = 0; k < slope_y.size(); ++k) slope_y[k] = alpha * d.defender[k];

      // Node i's share of Hbar; the control term does not depend on the state.
      const auto h_bar = [&](const NodeState& xs, const std::vector<Vec3>& ys) {
        return lam_bar.dot(node_rhs(t, xs, ys, dyn));
      };

      NodeState xp = s;
      for (std::size_t q = 0; q < s.flat_size(); ++q) {
        const double x0 = s.flat(q);
        const double step = 1e-6 * (1.0 + std::abs(x0));
        xp.flat(q) = x0 + step;
        const double hp = h_bar(xp, y);
        xp.flat(q) = x0 - step;
        const double hm = h_bar(xp, y);
        xp.flat(q) = x0;
        const double grad = (hp - hm) / (2.0 * step);
        r.max_abs = std::max(r.max_abs, std::abs(slope.flat(q) + grad));
        r.max_rhs = std::max(r.max_rhs, std::abs(grad));
      }
      std::vector<Vec3> yp = y;
      for (std::size_t k = 0; k < y.size(); ++k) {
        for (int c = 0; c < 3; ++c) {
          const double y0 = y[k][c];
          const double step = 1e-6 * (1.0 + std::abs(y0));
          yp[k][c] = y0 + step;
          const double hp = h_bar(s, yp);
          yp[k][c] = y0 - step;
          const double hm = h_bar(s, yp);
          yp[k][c] = y0;
          const double grad = (hp - hm) / (2.0 * step);
          r.max_abs = std::max(r.max_abs, std::abs(slope_y[k][c] + grad));
          r.max_rhs = std::max(r.max_rhs, std::abs(grad));
        }
      }
      ++r.checked_points;
    }
  });

  DualResidual total;
  for (const auto& r : per_node) {
    total.max_abs = std::max(total.max_abs, r.max_abs);
    total.max_rhs = std::max(total.max_rhs, r.max_rhs);
    total.checked_points += r.checked_points;
  }
  return total;
}

std::vector<ConvergenceRow> hamiltonian_convergence(const ScenarioConfig& cfg,
                                                    const OptimizationConfig& opt,
                                                    const std::vector<int>& M_list,
                                                    QuadratureScheme scheme) {
  std::vector<ConvergenceRow> rows;
  for (int M : M_list) {
    ConvergenceRow row;
    row.M = M;
    try {
      const QuadratureRule rule = build_rule(scheme, M, cfg.uncertain);
      const OptimalSolution sol = optimize(cfg, rule, opt);
      const Trajectory traj = simulate_ensemble(sol.control, rule, cfg, opt.jobs);
      const CostateEnsemble lam = integrate_costates(traj, sol.control, rule, cfg, opt.jobs);
      row.profile = hamiltonian_profile(traj, lam, sol.control, rule, cfg);
      row.max_abs_H = row.profile.max_abs;
      row.max_deviation_H = row.profile.max_deviation;
      row.objective = sol.objective_value;
      row.iterations = sol.iterations;
      row.status = to_string(sol.status);
      row.ok = true;
    } catch (const std::exception& e) {
      row.status = std::string("error: ") + e.what();
      row.ok = false;
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace swarmdef
