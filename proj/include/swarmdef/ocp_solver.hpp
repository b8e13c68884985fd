#pragma once

#include "swarmdef/engagement.hpp"

#include <optional>

namespace swarmdef {

struct OptimizationConfig {
  int max_iterations = 200;
  double gradient_tolerance = 1e-4;  // on the projected-gradient 2-norm
  double armijo = 1e-4;
  double backtrack = 0.5;
  int max_backtracks = 40;
  int segments = 45;                 // S; knots = S + 1
  std::vector<Vec3> initial_knots;   // empty: defenders hold station
  int jobs = 1;

  void validate() const;
};

struct IterationRecord {
  int iteration = 0;
  double objective = 0.0;
  double gradient_norm = 0.0;
  double step = 0.0;
};

enum class SolveStatus { Converged, IterationLimit, LineSearchStalled };
std::string to_string(SolveStatus s);

struct OptimalSolution {
  ControlSchedule control;
  double objective_value = 0.0;
  double gradient_norm = 0.0;
  int iterations = 0;
  SolveStatus status = SolveStatus::IterationLimit;
  QuadratureRule rule;
  std::vector<IterationRecord> log;

  bool converged() const { return status == SolveStatus::Converged; }
};

/// Objective value plus its gradient with respect to every control knot.
struct ObjectiveEval {
  double value = 0.0;
  std::vector<Vec3> gradient;
  std::vector<double> node_costs;
};

/// sum_i alpha_i (1 - P_0(t_f, theta_i)).
double ensemble_objective(const ControlSchedule& ctrl, const QuadratureRule& rule,
                          const ScenarioConfig& cfg, int jobs = 1);

/// Exact gradient of the RK4-discretized objective (reverse sweep through the
/// integrator and the control interpolation).
std::vector<Vec3> objective_gradient(const ControlSchedule& ctrl, const QuadratureRule& rule,
                                     const ScenarioConfig& cfg, int jobs = 1);

ObjectiveEval evaluate_objective(const ControlSchedule& ctrl, const QuadratureRule& rule,
                                 const ScenarioConfig& cfg, int jobs = 1);

/// Reverse sweep for one node given its stored forward states; returns the
/// control-knot gradient of weight * terminal_cost.
std::vector<Vec3> node_gradient(const ControlSchedule& ctrl, const std::vector<NodeState>& states,
                                const DefenderPath& path, const NodeDynamics& dyn, double weight);

/// Radially projects every knot onto the ball of radius u_max.
ControlSchedule project_control(const ControlSchedule& ctrl, double u_max);

/// Projected-gradient descent with Armijo backtracking along the projection arc.
OptimalSolution optimize(const ScenarioConfig& cfg, const QuadratureRule& rule,
                         const OptimizationConfig& opt);

}  // namespace swarmdef
