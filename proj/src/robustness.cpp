#include "swarmdef/robustness.hpp"

#include "swarmdef/csv.hpp"
#include "swarmdef/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

namespace swarmdef {
namespace {

void check_control(const ControlSchedule& ctrl, const ScenarioConfig& cfg) {
  if (ctrl.defenders != cfg.defenders) {
    throw ConfigError("control schedule has " + std::to_string(ctrl.defenders) +
                      " defenders, scenario has " + std::to_string(cfg.defenders));
  }
  if (std::abs(ctrl.t_final - cfg.t_final) > 1e-12 * cfg.t_final) {
    throw ConfigError("control schedule horizon does not match scenario t_final");
  }
  for (const Vec3& k : ctrl.knots) {
    if (!k.allFinite() || k.norm() > cfg.u_max * (1.0 + 1e-12)) {
      throw ConfigError("control schedule is not feasible: a knot exceeds u_max");
    }
  }
}

}  // namespace

bool SweepResult::ok() const {
  for (const auto& curve : errors) {
    for (const auto& e : curve) {
      if (!e.empty()) return false;
    }
  }
  return true;
}

std::vector<double> sweep_grid(const ParamDomain& domain, int G) {
  if (G < 1) throw ConfigError("sweep grid size must be >= 1");
  if (G == 1) return {domain.nominal_value()};
  std::vector<double> out(static_cast<std::size_t>(G));
  const double span = domain.upper - domain.lower;
  for (int g = 0; g < G; ++g) out[g] = domain.lower + span * g / (G - 1);
  out.back() = domain.upper;
  return out;
}

std::vector<double> sweep_weights(const ParamDomain& domain, std::span<const double> thetas) {
  const std::size_t G = thetas.size();
  std::vector<double> w(G, 1.0);
  if (G > 1) {
    for (std::size_t g = 0; g < G; ++g) {
      const double left = g > 0 ? thetas[g] - thetas[g - 1] : 0.0;
      const double right = g + 1 < G ? thetas[g + 1] - thetas[g] : 0.0;
      w[g] = 0.5 * (left + right) * domain.density(thetas[g]);
    }
  }
  double total = 0.0;
  for (double v : w) total += v;
  for (double& v : w) v /= total;
  return w;
}

SweepResult sweep(std::span<const ControlSchedule> controls, std::span<const std::string> labels,
                  const ParamDomain& domain, int G, const ScenarioConfig& cfg, int jobs) {
  if (controls.size() != labels.size()) {
    throw std::invalid_argument("sweep: one label per control is required");
  }
  domain.validate();
  ScenarioConfig bound = cfg;
  bound.uncertain = domain;
  bound.validate();
  for (const auto& c : controls) check_control(c, bound);

  SweepResult r;
  r.parameter = domain.name;
  r.thetas = sweep_grid(domain, G);
  r.labels.assign(labels.begin(), labels.end());
  const std::size_t n = r.thetas.size();
  r.costs.assign(controls.size(), std::vector<double>(n, std::numeric_limits<double>::quiet_NaN()));
  r.errors.assign(controls.size(), std::vector<std::string>(n));

  const std::size_t total = controls.size() * n;
  parallel_for(total, jobs, [&](std::size_t idx) {
    const std::size_t c = idx / n;
    const std::size_t g = idx % n;
    const double theta[1] = {r.thetas[g]};
    try {
      const Trajectory traj = simulate_ensemble(controls[c], theta, bound, 1);
      r.costs[c][g] = terminal_cost(traj.nodes[0].back());
    } catch (const std::exception& e) {
      r.errors[c][g] = e.what();
    }
  });
  return r;
}

SweepResult sweep(const ControlSchedule& ctrl, const ParamDomain& domain, int G,
                  const ScenarioConfig& cfg, int jobs, const std::string& label) {
  const std::string labels[1] = {label};
  return sweep(std::span<const ControlSchedule>(&ctrl, 1), labels, domain, G, cfg, jobs);
}

CurveSummary summarize(const SweepResult& result, std::size_t curve, const ParamDomain& domain) {
  CurveSummary s;
  s.label = result.labels.at(curve);
  const auto w = sweep_weights(domain, result.thetas);
  const auto& c = result.costs.at(curve);
  s.worst = -std::numeric_limits<double>::infinity();
  for (std::size_t g = 0; g < c.size(); ++g) {
    s.prior_mean += w[g] * c[g];
    if (std::isnan(c[g])) continue;
    if (c[g] > s.worst) {
      s.worst = c[g];
      s.worst_theta = result.thetas[g];
    }
  }
  return s;
}

Comparison compare(const ControlSchedule& nominal, const ControlSchedule& robust,
                   const ParamDomain& domain, int G, const ScenarioConfig& cfg, int jobs) {
  const ControlSchedule controls[2] = {nominal, robust};
  const std::string labels[2] = {"nominal", "robust"};
  Comparison out;
  out.sweep = sweep(controls, labels, domain, G, cfg, jobs);
  out.nominal = summarize(out.sweep, 0, domain);
  out.robust = summarize(out.sweep, 1, domain);

  ScenarioConfig bound = cfg;
  bound.uncertain = domain;
  const double theta[1] = {domain.nominal_value()};
  out.nominal_at_nominal = terminal_cost(simulate_ensemble(nominal, theta, bound, 1).nodes[0].back());
  out.robust_at_nominal = terminal_cost(simulate_ensemble(robust, theta, bound, 1).nodes[0].back());
  return out;
}

Comparison compare(const OptimalSolution& nominal, const OptimalSolution& robust,
                   const ParamDomain& domain, int G, const ScenarioConfig& cfg, int jobs) {
  return compare(nominal.control, robust.control, domain, G, cfg, jobs);
}

void write_sweep_csv(std::ostream& out, const SweepResult& result) {
  out << "parameter,theta";
  for (const auto& l : result.labels) out << (l == "cost" ? ",cost" : ",cost_" + l);
  out << '\n';
  for (std::size_t g = 0; g < result.size(); ++g) {
    out << result.parameter << ',' << fmt_real(result.thetas[g]);
    for (const auto& c : result.costs) out << ',' << fmt_real(c[g]);
    out << '\n';
  }
}

}  // namespace swarmdef
