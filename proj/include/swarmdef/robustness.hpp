#pragma once

#include "swarmdef/ocp_solver.hpp"

#include <iosfwd>

namespace swarmdef {

/// Terminal cost 1 - P_0(t_f, theta) of one or more controls on a uniform
/// parameter grid. Failed grid points hold NaN and the error text.
struct SweepResult {
  std::string parameter;
  std::vector<double> thetas;
  std::vector<std::string> labels;
  std::vector<std::vector<double>> costs;        // [curve][grid point]
  std::vector<std::vector<std::string>> errors;  // empty string when the point succeeded

  std::size_t size() const { return thetas.size(); }
  bool ok() const;
};

/// G uniformly spaced values; the endpoints are exactly lower and upper.
/// G == 1 gives the nominal value alone.
std::vector<double> sweep_grid(const ParamDomain& domain, int G);

/// Trapezoid weights on the sweep grid folded with the prior, summing to 1.
std::vector<double> sweep_weights(const ParamDomain& domain, std::span<const double> thetas);

/// Simulates ctrl against each grid value of domain.name (which may be any
/// bindable parameter, not only the one the control was trained on).
SweepResult sweep(const ControlSchedule& ctrl, const ParamDomain& domain, int G,
                  const ScenarioConfig& cfg, int jobs = 1, const std::string& label = "cost");

/// Several controls on the same grid, one curve each.
SweepResult sweep(std::span<const ControlSchedule> controls, std::span<const std::string> labels,
                  const ParamDomain& domain, int G, const ScenarioConfig& cfg, int jobs = 1);

struct CurveSummary {
  std::string label;
  double prior_mean = 0.0;  // NaN if any grid point failed
  double worst = 0.0;
  double worst_theta = 0.0;
};

struct Comparison {
  SweepResult sweep;
  CurveSummary nominal;
  CurveSummary robust;
  double nominal_at_nominal = 0.0;  // nominal control's cost at the nominal theta
  double robust_at_nominal = 0.0;
  /// nominal.prior_mean - robust.prior_mean; positive when the robust control wins.
  double margin() const { return nominal.prior_mean - robust.prior_mean; }
};

CurveSummary summarize(const SweepResult& result, std::size_t curve, const ParamDomain& domain);

/// Paired sweep of a nominal and a robust solution plus summary statistics.
Comparison compare(const OptimalSolution& nominal, const OptimalSolution& robust,
                   const ParamDomain& domain, int G, const ScenarioConfig& cfg, int jobs = 1);
Comparison compare(const ControlSchedule& nominal, const ControlSchedule& robust,
                   const ParamDomain& domain, int G, const ScenarioConfig& cfg, int jobs = 1);

/// parameter,theta,cost_<label>... ; a single curve labelled "cost" gives
/// parameter,theta,cost.
void write_sweep_csv(std::ostream& out, const SweepResult& result);

}  // namespace swarmdef
