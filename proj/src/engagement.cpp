#include "swarmdef/engagement.hpp"

#include "swarmdef/csv.hpp"
#include "swarmdef/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <ostream>
#include <random>

namespace swarmdef {

// ---------------------------------------------------------------------------
// Scenario configuration

int ScenarioConfig::steps() const { return static_cast<int>(std::llround(t_final / dt)); }

void ScenarioConfig::validate() const {
  if (dim != 2 && dim != 3) throw ConfigError("dim must be 2 or 3");
  if (attackers < 1) throw ConfigError("attackers must be >= 1");
  if (defenders < 1) throw ConfigError("defenders must be >= 1");
  if (!(t_final > 0.0) || !std::isfinite(t_final)) throw ConfigError("t_final must be positive");
  if (!(dt > 0.0) || dt > t_final) throw ConfigError("dt must be in (0, t_final]");
  if (std::abs(steps() * dt - t_final) > 1e-9 * t_final) {
    throw ConfigError("dt must divide t_final");
  }
  if (!(u_max > 0.0) || !std::isfinite(u_max)) throw ConfigError("u_max must be positive");
  if (!(tracking_core >= 0.0) || !std::isfinite(tracking_core)) {
    throw ConfigError("tracking_core must be a non-negative finite number");
  }
  if (const auto* m1 = std::get_if<Model1Params>(&model.params)) {
    m1->validate();
  } else {
    std::get<Model2Params>(model.params).validate();
  }
  weapons.validate();
  uncertain.validate();
  const auto names = bindable_parameters(model);
  if (std::find(names.begin(), names.end(), uncertain.name) == names.end()) {
    std::string list;
    for (const auto& n : names) list += (list.empty() ? "" : ", ") + n;
    throw ConfigError("uncertain.name '" + uncertain.name + "' is not bindable; expected one of: " + list);
  }
  if (!attacker_init.positions.empty() &&
      attacker_init.positions.size() != static_cast<std::size_t>(attackers)) {
    throw ConfigError("attacker_init.positions must list exactly `attackers` entries");
  }
  if (!attacker_init.velocities.empty() &&
      attacker_init.velocities.size() != static_cast<std::size_t>(attackers)) {
    throw ConfigError("attacker_init.velocities must list exactly `attackers` entries");
  }
  if (!defender_init.positions.empty() &&
      defender_init.positions.size() != static_cast<std::size_t>(defenders)) {
    throw ConfigError("defender_init.positions must list exactly `defenders` entries");
  }
}

namespace {

struct FieldRef {
  const char* name;
  double* ptr;
};

std::vector<FieldRef> model_fields(SwarmModel& model) {
  if (auto* p = std::get_if<Model1Params>(&model.params)) {
    return {{"alpha", &p->alpha}, {"d0", &p->d0}, {"d1", &p->d1}, {"alpha_h", &p->alpha_h},
            {"h0", &p->h0},       {"K1", &p->K1}, {"K2", &p->K2}};
  }
  auto& p = std::get<Model2Params>(model.params);
  return {{"r_al", &p.r_al},   {"w_al", &p.w_al}, {"r_coh", &p.r_coh},
          {"w_coh", &p.w_coh}, {"r_sep", &p.r_sep}, {"w_sep", &p.w_sep},
          {"r_I", &p.r_I},     {"w_I", &p.w_I},   {"K1", &p.K1}};
}

std::vector<FieldRef> weapon_fields(WeaponParams& w) {
  return {{"lambda_D", &w.lambda_D}, {"sigma_D", &w.sigma_D},
          {"lambda_A", &w.lambda_A}, {"sigma_A", &w.sigma_A}};
}

}  // namespace

std::vector<std::string> bindable_parameters(const SwarmModel& model) {
  SwarmModel copy = model;
  WeaponParams w;
  std::vector<std::string> names;
  for (const auto& f : model_fields(copy)) names.emplace_back(f.name);
  for (const auto& f : weapon_fields(w)) names.emplace_back(f.name);
  return names;
}

double get_parameter(const ScenarioConfig& cfg, const std::string& name) {
  ScenarioConfig copy = cfg;
  for (const auto& f : model_fields(copy.model)) {
    if (name == f.name) return *f.ptr;
  }
  for (const auto& f : weapon_fields(copy.weapons)) {
    if (name == f.name) return *f.ptr;
  }
  throw ConfigError("unknown parameter '" + name + "'");
}

ScenarioConfig with_parameter(const ScenarioConfig& cfg, const std::string& name, double value) {
  ScenarioConfig out = cfg;
  for (const auto& f : model_fields(out.model)) {
    if (name == f.name) {
      *f.ptr = value;
      return out;
    }
  }
  for (const auto& f : weapon_fields(out.weapons)) {
    if (name == f.name) {
      *f.ptr = value;
      return out;
    }
  }
  std::string list;
  for (const auto& n : bindable_parameters(cfg.model)) list += (list.empty() ? "" : ", ") + n;
  throw ConfigError("unknown parameter '" + name + "'; bindable parameters: " + list);
}

NodeDynamics bind_node(const ScenarioConfig& cfg, double theta) {
  const ScenarioConfig bound = with_parameter(cfg, cfg.uncertain.name, theta);
  return {bound.model, bound.weapons, bound.hvu, bound.tracking_core};
}

// ---------------------------------------------------------------------------
// NodeState

NodeState NodeState::zeros(std::size_t attackers, std::size_t defenders) {
  NodeState s;
  s.x.assign(attackers, Vec3::Zero());
  s.v.assign(attackers, Vec3::Zero());
  s.survival.Q.assign(attackers, 0.0);
  s.survival.P.assign(defenders + 1, 0.0);
  return s;
}

void NodeState::axpy(double a, const NodeState& o) {
  for (std::size_t j = 0; j < x.size(); ++j) {
    x[j] += a * o.x[j];
    v[j] += a * o.v[j];
  }
  for (std::size_t j = 0; j < survival.Q.size(); ++j) survival.Q[j] += a * o.survival.Q[j];
  for (std::size_t k = 0; k < survival.P.size(); ++k) survival.P[k] += a * o.survival.P[k];
}

double NodeState::dot(const NodeState& o) const {
  double s = 0.0;
  for (std::size_t j = 0; j < x.size(); ++j) s += x[j].dot(o.x[j]) + v[j].dot(o.v[j]);
  for (std::size_t j = 0; j < survival.Q.size(); ++j) s += survival.Q[j] * o.survival.Q[j];
  for (std::size_t k = 0; k < survival.P.size(); ++k) s += survival.P[k] * o.survival.P[k];
  return s;
}

double NodeState::max_abs() const {
  double m = 0.0;
  for (std::size_t i = 0; i < flat_size(); ++i) m = std::max(m, std::abs(flat(i)));
  return m;
}

bool NodeState::all_finite() const {
  for (std::size_t i = 0; i < flat_size(); ++i) {
    if (!std::isfinite(flat(i))) return false;
  }
  return true;
}

double& NodeState::flat(std::size_t idx) {
  const std::size_t n3 = 3 * x.size();
  if (idx < n3) return x[idx / 3][static_cast<Eigen::Index>(idx % 3)];
  idx -= n3;
  if (idx < n3) return v[idx / 3][static_cast<Eigen::Index>(idx % 3)];
  idx -= n3;
  if (idx < survival.Q.size()) return survival.Q[idx];
  return survival.P[idx - survival.Q.size()];
}

double NodeState::flat(std::size_t idx) const { return const_cast<NodeState*>(this)->flat(idx); }

// ---------------------------------------------------------------------------
// Controls

ControlSchedule ControlSchedule::zeros(double t_final, int segments, int defenders) {
  if (segments < 1) throw ConfigError("control segments must be >= 1");
  ControlSchedule c;
  c.t_final = t_final;
  c.segments = segments;
  c.defenders = defenders;
  c.knots.assign(static_cast<std::size_t>(defenders) * (segments + 1), Vec3::Zero());
  return c;
}

std::pair<int, double> ControlSchedule::locate(double t) const {
  const double h = t_final / segments;
  const double pos = std::clamp(t / h, 0.0, static_cast<double>(segments));
  int s = std::min(static_cast<int>(std::floor(pos)), segments - 1);
  return {s, pos - s};
}

Vec3 ControlSchedule::at(int k, double t) const {
  const auto [s, w] = locate(t);
  return (1.0 - w) * knot(k, s) + w * knot(k, s + 1);
}

std::vector<Vec3> ControlSchedule::at(double t) const {
  std::vector<Vec3> u(defenders);
  for (int k = 0; k < defenders; ++k) u[k] = at(k, t);
  return u;
}

void ControlSchedule::scatter(int k, double t, const Vec3& g, std::vector<Vec3>& grad) const {
  const auto [s, w] = locate(t);
  const std::size_t base = static_cast<std::size_t>(k) * knot_count();
  grad[base + s] += (1.0 - w) * g;
  grad[base + s + 1] += w * g;
}

// ---------------------------------------------------------------------------
// Initial conditions

namespace {

double unit_uniform(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

}  // namespace

NodeState initial_node_state(const ScenarioConfig& cfg) {
  const std::size_t N = cfg.attackers;
  NodeState s = NodeState::zeros(N, cfg.defenders);
  s.survival = SurvivalState::initial(N, cfg.defenders);

  const auto& init = cfg.attacker_init;
  if (!init.positions.empty()) {
    s.x = init.positions;
  } else {
    int side = 1;
    while (std::pow(side, cfg.dim) < static_cast<double>(N)) ++side;
    const Vec3 center = cfg.hvu.position + init.standoff * init.direction.normalized();
    std::mt19937_64 rng(init.seed);
    const double offset = 0.5 * (side - 1);
    for (std::size_t j = 0; j < N; ++j) {
      const std::size_t a = j % side;
      const std::size_t b = (j / side) % side;
      const std::size_t c = cfg.dim == 3 ? j / (side * side) : 0;
      Vec3 p(a - offset, b - offset, cfg.dim == 3 ? c - offset : 0.0);
      p *= init.spacing;
      for (int d = 0; d < cfg.dim; ++d) p[d] += init.jitter * (2.0 * unit_uniform(rng) - 1.0);
      s.x[j] = center + p;
      if (cfg.dim == 2) s.x[j].z() = 0.0;
    }
  }
  if (!init.velocities.empty()) s.v = init.velocities;
  return s;
}

std::vector<Vec3> initial_defender_positions(const ScenarioConfig& cfg) {
  if (!cfg.defender_init.positions.empty()) return cfg.defender_init.positions;
  std::vector<Vec3> y(cfg.defenders);
  const Vec3 c = cfg.hvu.position;
  for (int k = 0; k < cfg.defenders; ++k) {
    const double ang = 2.0 * std::numbers::pi * k / cfg.defenders;
    y[k] = c + cfg.defender_init.radius * Vec3(std::cos(ang), std::sin(ang), 0.0);
  }
  return y;
}

DefenderPath integrate_defenders(const ControlSchedule& ctrl, const ScenarioConfig& cfg) {
  const int steps = cfg.steps();
  const double h = cfg.dt;
  const std::size_t K = cfg.defenders;
  if (ctrl.defenders != cfg.defenders) {
    throw ConfigError("control schedule defender count does not match scenario");
  }
  DefenderPath path;
  path.dt = h;
  path.y.resize(steps + 1);
  path.y2.resize(steps);
  path.y3.resize(steps);
  path.y4.resize(steps);
  path.y[0] = initial_defender_positions(cfg);
  for (int n = 0; n < steps; ++n) {
    const double t = n * h;
    const auto& y = path.y[n];
    auto& y2 = path.y2[n];
    auto& y3 = path.y3[n];
    auto& y4 = path.y4[n];
    y2.resize(K);
    y3.resize(K);
    y4.resize(K);
    auto& next = path.y[n + 1];
    next.resize(K);
    for (std::size_t k = 0; k < K; ++k) {
      const Vec3 k1 = ctrl.at(static_cast<int>(k), t);
      y2[k] = y[k] + 0.5 * h * k1;
      const Vec3 k2 = ctrl.at(static_cast<int>(k), t + 0.5 * h);
      y3[k] = y[k] + 0.5 * h * k2;
      const Vec3 k3 = k2;
      y4[k] = y[k] + h * k3;
      const Vec3 k4 = ctrl.at(static_cast<int>(k), t + h);
      next[k] = y[k] + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
  }
  return path;
}

// ---------------------------------------------------------------------------
// Dynamics

NodeState node_rhs(double t, const NodeState& node, std::span<const Vec3> y,
                   const NodeDynamics& dyn) {
  const std::size_t N = node.x.size();
  NodeState d;
  d.x = node.v;
  d.v.resize(N);
  const Vec3 hvu = dyn.hvu.at(t);
  const SwarmGeometry geom{node.x, node.v, y, hvu, dyn.tracking_core};
  for (std::size_t i = 0; i < N; ++i) {
    try {
      d.v[i] = swarm_control(i, geom, dyn.model);
    } catch (const SimulationError& e) {
      throw SimulationError(e.detail(), t, -1, static_cast<long>(i));
    }
  }
  d.survival = survival_rhs(node.survival, node.x, y, hvu, dyn.weapons);
  return d;
}

NodeState node_rhs(double t, const NodeState& node, std::span<const Vec3> y, double theta,
                   const ScenarioConfig& cfg) {
  return node_rhs(t, node, y, bind_node(cfg, theta));
}

NodeState node_rhs_vjp(double t, const NodeState& node, std::span<const Vec3> y,
                       const NodeDynamics& dyn, const NodeState& adj,
                       std::span<Vec3> adj_y_out) {
  const std::size_t N = node.x.size();
  NodeState out = node.zeros_like();
  // xdot = v
  for (std::size_t j = 0; j < N; ++j) out.v[j] += adj.x[j];

  const Vec3 hvu = dyn.hvu.at(t);
  const SwarmGeometry geom{node.x, node.v, y, hvu, dyn.tracking_core};
  const SwarmCotangent cot{out.x, out.v, adj_y_out};
  for (std::size_t i = 0; i < N; ++i) {
    try {
      swarm_control_vjp(i, geom, dyn.model, adj.v[i], cot);
    } catch (const SimulationError& e) {
      throw SimulationError(e.detail(), t, -1, static_cast<long>(i));
    }
  }
  survival_rhs_vjp(node.survival, node.x, y, hvu, dyn.weapons, adj.survival.Q, adj.survival.P,
                   out.survival.Q, out.survival.P, out.x, adj_y_out);
  return out;
}

NodeState rk4_node_step(const NodeState& s, std::size_t n, const DefenderPath& path,
                        const NodeDynamics& dyn) {
  const double h = path.dt;
  const double t = static_cast<double>(n) * h;
  const NodeState k1 = node_rhs(t, s, path.y[n], dyn);
  NodeState z = s;
  z.axpy(0.5 * h, k1);
  const NodeState k2 = node_rhs(t + 0.5 * h, z, path.y2[n], dyn);
  z = s;
  z.axpy(0.5 * h, k2);
  const NodeState k3 = node_rhs(t + 0.5 * h, z, path.y3[n], dyn);
  z = s;
  z.axpy(h, k3);
  const NodeState k4 = node_rhs(t + h, z, path.y4[n], dyn);

  NodeState next = s;
  next.axpy(h / 6.0, k1);
  next.axpy(h / 3.0, k2);
  next.axpy(h / 3.0, k3);
  next.axpy(h / 6.0, k4);
  return next;
}

namespace {

void check_survival(const NodeState& s, double t, long step) {
  const auto bad = [](double p) { return !(p >= 0.0 && p <= 1.0); };
  for (std::size_t j = 0; j < s.survival.Q.size(); ++j) {
    if (bad(s.survival.Q[j])) {
      throw SimulationError("step-stability violation: attacker survival left [0,1]", t, step,
                            static_cast<long>(j));
    }
  }
  for (std::size_t k = 0; k < s.survival.P.size(); ++k) {
    if (bad(s.survival.P[k])) {
      throw SimulationError("step-stability violation: defender/HVU survival left [0,1]", t,
                            step, static_cast<long>(k));
    }
  }
}

}  // namespace

Trajectory simulate_ensemble(const ControlSchedule& ctrl, std::span<const double> thetas,
                             const ScenarioConfig& cfg, int jobs) {
  const int steps = cfg.steps();
  Trajectory traj;
  traj.times.resize(steps + 1);
  for (int n = 0; n <= steps; ++n) traj.times[n] = n * cfg.dt;
  traj.defenders = integrate_defenders(ctrl, cfg);
  traj.thetas.assign(thetas.begin(), thetas.end());
  traj.nodes.resize(thetas.size());

  const NodeState init = initial_node_state(cfg);
  parallel_for(thetas.size(), jobs, [&](std::size_t i) {
    const NodeDynamics dyn = bind_node(cfg, thetas[i]);
    auto& states = traj.nodes[i];
    states.reserve(steps + 1);
    states.push_back(init);
    for (int n = 0; n < steps; ++n) {
      try {
        states.push_back(rk4_node_step(states.back(), n, traj.defenders, dyn));
      } catch (const SimulationError& e) {
        throw SimulationError(e.detail() + " (node " + std::to_string(i) + ")",
                              e.time() >= 0 ? e.time() : n * cfg.dt, n, e.agent());
      }
      check_survival(states.back(), (n + 1) * cfg.dt, n);
    }
  });
  return traj;
}

Trajectory simulate_ensemble(const ControlSchedule& ctrl, const QuadratureRule& rule,
                             const ScenarioConfig& cfg, int jobs) {
  return simulate_ensemble(ctrl, std::span<const double>(rule.nodes), cfg, jobs);
}

double terminal_cost(const NodeState& node) { return 1.0 - node.survival.P[0]; }

void write_trajectory_csv(std::ostream& out, const Trajectory& traj, const ScenarioConfig& cfg,
                          int stride) {
  const int dim = cfg.dim;
  out << "t,node_index,agent_kind,agent_index,x,y";
  if (dim == 3) out << ",z";
  out << ",Q_or_P\n";
  const auto row = [&](double t, std::size_t node, const char* kind, std::size_t idx,
                       const Vec3& p, double prob) {
    out << fmt_real(t) << ',' << node << ',' << kind << ',' << idx;
    for (int d = 0; d < dim; ++d) out << ',' << fmt_real(p[d]);
    out << ',' << fmt_real(prob) << '\n';
  };
  const std::size_t last = traj.steps();
  for (std::size_t n = 0; n <= last; ++n) {
    if (n % static_cast<std::size_t>(std::max(stride, 1)) != 0 && n != last) continue;
    const double t = traj.times[n];
    for (std::size_t i = 0; i < traj.node_count(); ++i) {
      const NodeState& s = traj.nodes[i][n];
      for (std::size_t j = 0; j < s.x.size(); ++j) row(t, i, "attacker", j, s.x[j], s.survival.Q[j]);
      const auto& y = traj.defenders.y[n];
      for (std::size_t k = 0; k < y.size(); ++k) row(t, i, "defender", k, y[k], s.survival.P[k + 1]);
      row(t, i, "hvu", 0, cfg.hvu.at(t), s.survival.P[0]);
    }
  }
}

}  // namespace swarmdef
