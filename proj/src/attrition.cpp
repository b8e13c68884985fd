#include "swarmdef/attrition.hpp"

#include <algorithm>
#include <cmath>

namespace swarmdef {
namespace {

void require(bool ok, const char* message) {
  if (!ok) throw ConfigError(message);
}

}  // namespace

void WeaponParams::validate() const {
  const auto intensity_ok = [](double v) { return std::isfinite(v) && v >= 0.0; };
  const auto range_ok = [](double v) { return std::isfinite(v) && v > 0.0; };
  require(intensity_ok(lambda_D), "weapons.lambda_D must be a non-negative finite number");
  require(intensity_ok(lambda_A), "weapons.lambda_A must be a non-negative finite number");
  require(range_ok(sigma_D), "weapons.sigma_D must be a positive finite number");
  require(range_ok(sigma_A), "weapons.sigma_A must be a positive finite number");
  if (lambda_H) require(intensity_ok(*lambda_H), "weapons.lambda_H must be a non-negative finite number");
  if (sigma_H) require(range_ok(*sigma_H), "weapons.sigma_H must be a positive finite number");
}

double damage_rate(double r, double lambda, double sigma) {
  return lambda * std::exp(-(r * r) / (2.0 * sigma * sigma));
}

SurvivalState survival_rhs(const SurvivalState& s, std::span<const Vec3> attacker_pos,
                           std::span<const Vec3> defender_pos, const Vec3& hvu_pos,
                           const WeaponParams& w) {
  const std::size_t N = attacker_pos.size();
  const std::size_t K = defender_pos.size();
  SurvivalState d{std::vector<double>(N, 0.0), std::vector<double>(K + 1, 0.0)};

  for (std::size_t j = 0; j < N; ++j) {
    double rate = 0.0;
    for (std::size_t k = 0; k < K; ++k) {
      rate += s.P[k + 1] * damage_rate((attacker_pos[j] - defender_pos[k]).norm(), w.lambda_D, w.sigma_D);
    }
    d.Q[j] = -s.Q[j] * rate;
  }

  double hvu_rate = 0.0;
  for (std::size_t j = 0; j < N; ++j) {
    hvu_rate += s.Q[j] * damage_rate((hvu_pos - attacker_pos[j]).norm(), w.hvu_lambda(), w.hvu_sigma());
  }
  d.P[0] = -s.P[0] * hvu_rate;

  for (std::size_t k = 0; k < K; ++k) {
    double rate = 0.0;
    for (std::size_t j = 0; j < N; ++j) {
      rate += s.Q[j] * damage_rate((defender_pos[k] - attacker_pos[j]).norm(), w.lambda_A, w.sigma_A);
    }
    d.P[k + 1] = -s.P[k + 1] * rate;
  }
  return d;
}

void survival_rhs_vjp(const SurvivalState& s, std::span<const Vec3> attacker_pos,
                      std::span<const Vec3> defender_pos, const Vec3& hvu_pos,
                      const WeaponParams& w, std::span<const double> adj_Q,
                      std::span<const double> adj_P, std::span<double> out_Q,
                      std::span<double> out_P, std::span<Vec3> out_attacker_pos,
                      std::span<Vec3> out_defender_pos) {
  const std::size_t N = attacker_pos.size();
  const std::size_t K = defender_pos.size();

  // d/dx_j of rate(|x_j - y|) is -rate/sigma^2 * (x_j - y).
  for (std::size_t j = 0; j < N; ++j) {
    for (std::size_t k = 0; k < K; ++k) {
      const Vec3 d = attacker_pos[j] - defender_pos[k];
      const double inv_s2 = 1.0 / (w.sigma_D * w.sigma_D);
      const double rate = damage_rate(d.norm(), w.lambda_D, w.sigma_D);
      // Qdot_j = -Q_j sum_k P_k rate_jk
      out_Q[j] -= adj_Q[j] * s.P[k + 1] * rate;
      out_P[k + 1] -= adj_Q[j] * s.Q[j] * rate;
      const Vec3 g = (adj_Q[j] * s.Q[j] * s.P[k + 1] * rate * inv_s2) * d;
      out_attacker_pos[j] += g;
      out_defender_pos[k] -= g;
    }
  }

  {
    const double inv_s2 = 1.0 / (w.hvu_sigma() * w.hvu_sigma());
    for (std::size_t j = 0; j < N; ++j) {
      const Vec3 d = attacker_pos[j] - hvu_pos;
      const double rate = damage_rate(d.norm(), w.hvu_lambda(), w.hvu_sigma());
      out_P[0] -= adj_P[0] * s.Q[j] * rate;
      out_Q[j] -= adj_P[0] * s.P[0] * rate;
      out_attacker_pos[j] += (adj_P[0] * s.P[0] * s.Q[j] * rate * inv_s2) * d;
    }
  }

  const double inv_s2 = 1.0 / (w.sigma_A * w.sigma_A);
  for (std::size_t k = 0; k < K; ++k) {
    for (std::size_t j = 0; j < N; ++j) {
      const Vec3 d = attacker_pos[j] - defender_pos[k];
      const double rate = damage_rate(d.norm(), w.lambda_A, w.sigma_A);
      out_P[k + 1] -= adj_P[k + 1] * s.Q[j] * rate;
      out_Q[j] -= adj_P[k + 1] * s.P[k + 1] * rate;
      const Vec3 g = (adj_P[k + 1] * s.P[k + 1] * s.Q[j] * rate * inv_s2) * d;
      out_attacker_pos[j] += g;
      out_defender_pos[k] -= g;
    }
  }
}

double max_total_damage_rate(const SurvivalState& s, std::span<const Vec3> attacker_pos,
                             std::span<const Vec3> defender_pos, const Vec3& hvu_pos,
                             const WeaponParams& w) {
  // Unit survival bounds each agent's exposure from above.
  const SurvivalState unit{std::vector<double>(s.Q.size(), 1.0), std::vector<double>(s.P.size(), 1.0)};
  const SurvivalState d = survival_rhs(unit, attacker_pos, defender_pos, hvu_pos, w);
  double worst = 0.0;
  for (double v : d.Q) worst = std::max(worst, -v);
  for (double v : d.P) worst = std::max(worst, -v);
  return worst;
}

}  // namespace swarmdef
