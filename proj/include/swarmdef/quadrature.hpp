#pragma once

#include "swarmdef/common.hpp"

#include <optional>
#include <span>
#include <string>

namespace swarmdef {

enum class PriorKind { Uniform };

/// Bounds and prior of one uncertain model parameter.
struct ParamDomain {
  std::string name;
  double lower = 0.0;
  double upper = 1.0;
  PriorKind prior = PriorKind::Uniform;
  std::optional<double> nominal;  // node used by the one-point rule

  double density(double theta) const;
  double nominal_value() const { return nominal.value_or(0.5 * (lower + upper)); }
  bool contains(double theta) const { return theta >= lower && theta <= upper; }
  void validate() const;
};

enum class QuadratureScheme { Trapezoid, GaussLegendre };

std::string to_string(QuadratureScheme scheme);
QuadratureScheme parse_scheme(const std::string& name);

/// Nodes and prior-folded weights; sum(weights) == 1 for a normalized prior.
struct QuadratureRule {
  QuadratureScheme scheme = QuadratureScheme::Trapezoid;
  ParamDomain domain;
  std::vector<double> nodes;
  std::vector<double> weights;

  std::size_t size() const { return nodes.size(); }
};

/// M == 1 gives the degenerate nominal rule (single node, weight 1).
QuadratureRule build_rule(QuadratureScheme scheme, int M, const ParamDomain& domain);

/// Sum of values[i] * weights[i], ascending node order.
double integrate(const QuadratureRule& rule, std::span<const double> values);

/// Raw Gauss-Legendre nodes/weights on [-1, 1].
void gauss_legendre(int M, std::vector<double>& nodes, std::vector<double>& weights);

}  // namespace swarmdef
