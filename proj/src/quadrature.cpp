#include "swarmdef/quadrature.hpp"

#include <cmath>
#include <numbers>

namespace swarmdef {

double ParamDomain::density(double theta) const {
  if (!contains(theta)) return 0.0;
  return 1.0 / (upper - lower);
}

void ParamDomain::validate() const {
  if (name.empty()) throw ConfigError("uncertain.name must be set");
  if (!std::isfinite(lower) || !std::isfinite(upper) || !(lower < upper)) {
    throw ConfigError("uncertain.lower must be smaller than uncertain.upper");
  }
  if (nominal && !contains(*nominal)) {
    throw ConfigError("uncertain.nominal must lie within [lower, upper]");
  }
}

std::string to_string(QuadratureScheme scheme) {
  return scheme == QuadratureScheme::Trapezoid ? "trapezoid" : "gauss-legendre";
}

QuadratureScheme parse_scheme(const std::string& name) {
  if (name == "trapezoid") return QuadratureScheme::Trapezoid;
  if (name == "gauss-legendre" || name == "gauss_legendre" || name == "gl") {
    return QuadratureScheme::GaussLegendre;
  }
  throw ConfigError("unknown quadrature scheme '" + name + "' (expected trapezoid or gauss-legendre)");
}

void gauss_legendre(int M, std::vector<double>& nodes, std::vector<double>& weights) {
  nodes.assign(M, 0.0);
  weights.assign(M, 0.0);
  for (int i = 0; i < (M + 1) / 2; ++i) {
    // Chebyshev-like initial guess, then Newton on P_M.
    double x = std::cos(std::numbers::pi * (i + 0.75) / (M + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0;
      double p1 = x;
      for (int k = 2; k <= M; ++k) {
        const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = M * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    nodes[i] = -x;
    nodes[M - 1 - i] = x;
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    weights[i] = w;
    weights[M - 1 - i] = w;
  }
}

QuadratureRule build_rule(QuadratureScheme scheme, int M, const ParamDomain& domain) {
  if (M < 1) throw ConfigError("quadrature node count M must be >= 1");
  domain.validate();
  QuadratureRule rule{scheme, domain, {}, {}};

  if (M == 1) {
    rule.nodes = {domain.nominal_value()};
    rule.weights = {1.0};
    return rule;
  }

  const double a = domain.lower;
  const double b = domain.upper;
  if (scheme == QuadratureScheme::Trapezoid) {
    const double h = (b - a) / (M - 1);
    for (int i = 0; i < M; ++i) {
      // Pin the last node to b exactly.
      const double theta = (i == M - 1) ? b : a + i * h;
      const double w = (i == 0 || i == M - 1) ? 0.5 * h : h;
      rule.nodes.push_back(theta);
      rule.weights.push_back(w * domain.density(theta));
    }
  } else {
    std::vector<double> x;
    std::vector<double> w;
    gauss_legendre(M, x, w);
    const double half = 0.5 * (b - a);
    const double mid = 0.5 * (a + b);
    for (int i = 0; i < M; ++i) {
      const double theta = mid + half * x[i];
      rule.nodes.push_back(theta);
      rule.weights.push_back(half * w[i] * domain.density(theta));
    }
  }
  return rule;
}

double integrate(const QuadratureRule& rule, std::span<const double> values) {
  if (values.size() != rule.size()) {
    throw std::invalid_argument("integrate: expected " + std::to_string(rule.size()) +
                                " values, got " + std::to_string(values.size()));
  }
  double sum = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) sum += values[i] * rule.weights[i];
  return sum;
}

}  // namespace swarmdef
