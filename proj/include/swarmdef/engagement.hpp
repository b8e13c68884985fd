#pragma once

#include "swarmdef/attrition.hpp"
#include "swarmdef/quadrature.hpp"
#include "swarmdef/swarm_models.hpp"

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>

namespace swarmdef {

/// Prescribed HVU motion; static when velocity is zero.
struct HvuPath {
  Vec3 position = Vec3::Zero();
  Vec3 velocity = Vec3::Zero();

  Vec3 at(double t) const { return position + t * velocity; }
  bool is_static() const { return velocity.isZero(0.0); }
};

/// Attacker initial conditions. Explicit positions win; otherwise a jittered
/// lattice centered `standoff` from the HVU along `direction`.
struct AttackerInit {
  double standoff = 30.0;
  double spacing = 1.5;
  double jitter = 0.25;
  std::uint64_t seed = 1;
  Vec3 direction = Vec3::UnitX();
  std::vector<Vec3> positions;
  std::vector<Vec3> velocities;
};

/// Defender initial positions. Explicit positions win; otherwise evenly spaced
/// on a horizontal ring of `radius` around the HVU, starting toward `direction`.
struct DefenderInit {
  double radius = 2.0;
  std::vector<Vec3> positions;
};

struct ScenarioConfig {
  int dim = 3;
  int attackers = 100;  // N
  int defenders = 10;   // K
  double t_final = 45.0;
  double dt = 0.05;
  SwarmModel model{Model1Params{}};
  WeaponParams weapons;
  HvuPath hvu;
  AttackerInit attacker_init;
  DefenderInit defender_init;
  double u_max = 2.0;
  double tracking_core = 0.1;  // 0 keeps the constant-magnitude pull all the way in
  ParamDomain uncertain{"d0", 0.5, 1.5, PriorKind::Uniform, 1.0};

  int steps() const;
  void validate() const;
};

/// Names of the model/weapon fields an uncertain parameter may bind to.
std::vector<std::string> bindable_parameters(const SwarmModel& model);
double get_parameter(const ScenarioConfig& cfg, const std::string& name);
/// Returns a copy with `name` set to `value`; throws ConfigError for unknown names.
ScenarioConfig with_parameter(const ScenarioConfig& cfg, const std::string& name, double value);

/// Per-node copy of the model and weapon parameters with theta substituted.
struct NodeDynamics {
  SwarmModel model;
  WeaponParams weapons;
  HvuPath hvu;
  double tracking_core = 0.0;
};

NodeDynamics bind_node(const ScenarioConfig& cfg, double theta);

/// Attacker kinematics and survival for one parameter node. Also used for
/// derivatives and costates, which share the layout.
struct NodeState {
  std::vector<Vec3> x;
  std::vector<Vec3> v;
  SurvivalState survival;

  static NodeState zeros(std::size_t attackers, std::size_t defenders);
  NodeState zeros_like() const { return zeros(x.size(), survival.P.size() - 1); }

  /// this += a * other
  void axpy(double a, const NodeState& other);
  double dot(const NodeState& other) const;
  double max_abs() const;
  bool all_finite() const;
  /// Flat view order: x, v, Q, P.
  std::size_t flat_size() const { return 6 * x.size() + survival.Q.size() + survival.P.size(); }
  double& flat(std::size_t idx);
  double flat(std::size_t idx) const;
};

/// Piecewise-linear defender controls on S uniform segments of [0, t_f].
struct ControlSchedule {
  double t_final = 0.0;
  int segments = 0;
  int defenders = 0;
  std::vector<Vec3> knots;  // index k * (segments + 1) + s

  static ControlSchedule zeros(double t_final, int segments, int defenders);

  int knot_count() const { return segments + 1; }
  Vec3& knot(int k, int s) { return knots[static_cast<std::size_t>(k) * knot_count() + s]; }
  const Vec3& knot(int k, int s) const { return knots[static_cast<std::size_t>(k) * knot_count() + s]; }

  /// Segment index and interpolation weight of the right knot at time t.
  std::pair<int, double> locate(double t) const;
  Vec3 at(int k, double t) const;
  std::vector<Vec3> at(double t) const;
  /// Adds cotangent g of u_k(t) onto the two knots spanning t.
  void scatter(int k, double t, const Vec3& g, std::vector<Vec3>& grad) const;
};

/// Defender path under a control schedule, including the RK4 stage values so
/// every parameter node sees identical defender positions.
struct DefenderPath {
  double dt = 0.0;
  std::vector<std::vector<Vec3>> y;  // grid values, steps + 1
  // Stage positions per step (stage 1 is y[n]).
  std::vector<std::vector<Vec3>> y2, y3, y4;
};

DefenderPath integrate_defenders(const ControlSchedule& ctrl, const ScenarioConfig& cfg);

struct Trajectory {
  std::vector<double> times;
  DefenderPath defenders;
  std::vector<std::vector<NodeState>> nodes;  // [node][step]
  std::vector<double> thetas;

  std::size_t node_count() const { return nodes.size(); }
  std::size_t steps() const { return times.size() - 1; }
};

NodeState initial_node_state(const ScenarioConfig& cfg);
std::vector<Vec3> initial_defender_positions(const ScenarioConfig& cfg);

/// Time derivative of a node's state given defender positions y.
NodeState node_rhs(double t, const NodeState& node, std::span<const Vec3> y,
                   const NodeDynamics& dyn);
NodeState node_rhs(double t, const NodeState& node, std::span<const Vec3> y, double theta,
                   const ScenarioConfig& cfg);

/// (d node_rhs / d(node, y))^T * adj. Returns the node part and adds the
/// defender-position part onto adj_y_out.
NodeState node_rhs_vjp(double t, const NodeState& node, std::span<const Vec3> y,
                       const NodeDynamics& dyn, const NodeState& adj,
                       std::span<Vec3> adj_y_out);

/// One classical RK4 step of a node along a precomputed defender path.
NodeState rk4_node_step(const NodeState& s, std::size_t step, const DefenderPath& path,
                        const NodeDynamics& dyn);

Trajectory simulate_ensemble(const ControlSchedule& ctrl, const QuadratureRule& rule,
                             const ScenarioConfig& cfg, int jobs = 1);
Trajectory simulate_ensemble(const ControlSchedule& ctrl, std::span<const double> thetas,
                             const ScenarioConfig& cfg, int jobs = 1);

/// 1 - P_0.
double terminal_cost(const NodeState& node);

/// Long-format CSV: t,node_index,agent_kind,agent_index,x,y[,z],Q_or_P.
void write_trajectory_csv(std::ostream& out, const Trajectory& traj, const ScenarioConfig& cfg,
                          int stride = 1);

}  // namespace swarmdef
