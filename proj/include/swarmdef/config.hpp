#pragma once

#include "swarmdef/ocp_solver.hpp"

#include <cstdint>
#include <string>

namespace swarmdef {

/// Everything a command-line run needs, loaded from one JSON document.
///
///   scenario      engagement geometry, swarm model, weapons, uncertain parameter
///   quadrature    scheme ("trapezoid" | "gauss-legendre") and node count
///   optimization  solver limits and the control discretization
///   sweep         grid size for robustness sweeps
///
/// Required keys: scenario.attackers, scenario.defenders, scenario.t_final,
/// scenario.dt, scenario.model.kind and scenario.uncertain.{name,lower,upper}.
/// Every other key falls back to the defaults of the default-constructed
/// structs. Unknown keys are rejected.
struct RunConfig {
  ScenarioConfig scenario;
  QuadratureScheme scheme = QuadratureScheme::Trapezoid;
  int nodes = 11;
  OptimizationConfig optimization;
  int sweep_grid = 21;

  void validate() const;
  QuadratureRule rule() const { return build_rule(scheme, nodes, scenario.uncertain); }
};

/// Parses and validates; errors are ConfigError naming the offending key path.
RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::string& path);

/// Canonical JSON with every field spelled out; parse_config(dump_config(c))
/// reproduces c exactly.
std::string dump_config(const RunConfig& cfg);

/// FNV-1a 64 of the canonical dump, as 16 hex digits.
std::string config_hash(const RunConfig& cfg);

}  // namespace swarmdef
