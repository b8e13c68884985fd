#pragma once

#include "swarmdef/ocp_solver.hpp"

namespace swarmdef {

/// Continuous-time costates of the node-collocated dual problem, one per
/// quadrature node, sampled on the trajectory grid.
///
/// Defender positions are shared by every node. Each node carries its own
/// copy of the defender costate, driven only by that node's dynamics; the
/// shared defender costate is their weighted sum, sum_i alpha_i lambda_y,i,
/// which is what duplicating y per node and collocating would produce.
struct CostateEnsemble {
  std::vector<std::vector<NodeState>> node;             // [node][step]
  std::vector<std::vector<std::vector<Vec3>>> defender; // [node][step][k]
  std::vector<double> weights;
  std::string jacobian_method = "analytic";

  /// sum_i alpha_i lambda_y,i at grid step n.
  std::vector<Vec3> shared_defender_costate(std::size_t n) const;
};

/// Backward RK4 on dlambda_i/dt = -(1/alpha_i) dH/dx_i = -(df/dx)^T lambda_i
/// from lambda_i(T) = dF/dx (-1 in the HVU survival slot). Mid-step states
/// come from cubic Hermite interpolation of the stored trajectory.
CostateEnsemble integrate_costates(const Trajectory& traj, const ControlSchedule& ctrl,
                                   const QuadratureRule& rule, const ScenarioConfig& cfg,
                                   int jobs = 1);

/// lambda_bar / alpha: maps a costate of the semi-discretized problem to the
/// collocated one. covector_unmap is its inverse.
NodeState covector_map(const NodeState& lambda_bar, double alpha);
NodeState covector_unmap(const NodeState& lambda_tilde, double alpha);
double covector_map(double lambda_bar, double alpha);
double covector_unmap(double lambda_tilde, double alpha);

struct HamiltonianProfile {
  std::vector<double> times;
  std::vector<double> values;
  double objective = 0.0;
  double max_abs = 0.0;
  double mean = 0.0;
  double max_deviation = 0.0;  // max_t |H(t) - mean_t H|

  /// Values divided by (1 + |objective|).
  double normalized_max_abs() const { return max_abs / (1.0 + std::abs(objective)); }
  double normalized_max_deviation() const { return max_deviation / (1.0 + std::abs(objective)); }
};

/// H(t_s) = sum_i alpha_i [lambda_i . f_i + lambda_y,i . u(t_s)] (no running cost).
HamiltonianProfile hamiltonian_profile(const Trajectory& traj, const CostateEnsemble& costates,
                                       const ControlSchedule& ctrl, const QuadratureRule& rule,
                                       const ScenarioConfig& cfg);

/// Hamiltonian at grid step n with the control replaced by u.
double hamiltonian_at(const Trajectory& traj, const CostateEnsemble& costates,
                      const QuadratureRule& rule, const ScenarioConfig& cfg, std::size_t n,
                      std::span<const Vec3> u);

/// Checks that alpha_i * lambda_i obeys the semi-discretized costate ODE: the
/// analytic right-hand side is compared with a central finite difference of
/// the weighted Hamiltonian in each state component.
struct DualResidual {
  double max_abs = 0.0;      // max |alpha_i dlambda_i/dt + dHbar/dx_i|
  double max_rhs = 0.0;      // max |dHbar/dx_i|, for scale
  std::size_t checked_points = 0;
};

DualResidual covector_residual(const Trajectory& traj, const CostateEnsemble& costates,
                               const QuadratureRule& rule, const ScenarioConfig& cfg,
                               int stride = 1, int jobs = 1);

struct ConvergenceRow {
  int M = 0;
  double max_abs_H = 0.0;
  double max_deviation_H = 0.0;
  double objective = 0.0;
  int iterations = 0;
  std::string status;
  bool ok = false;
  HamiltonianProfile profile;
};

/// Optimize and evaluate the Hamiltonian for every M in M_list (ascending).
/// A failing M is recorded with its error and the sweep continues.
std::vector<ConvergenceRow> hamiltonian_convergence(const ScenarioConfig& cfg,
                                                    const OptimizationConfig& opt,
                                                    const std::vector<int>& M_list,
                                                    QuadratureScheme scheme = QuadratureScheme::Trapezoid);

}  // namespace swarmdef
