#pragma once

#include "swarmdef/common.hpp"

#include <optional>
#include <span>

namespace swarmdef {

/// Weapon intensities (lambda) and ranges (sigma). Index D is defender fire on
/// attackers; index A is attacker fire on defenders and, unless overridden,
/// on the HVU.
struct WeaponParams {
  double lambda_D = 2.0;
  double sigma_D = 2.0;
  double lambda_A = 0.05;
  double sigma_A = 2.0;
  std::optional<double> lambda_H;  // attacker fire on the HVU
  std::optional<double> sigma_H;

  double hvu_lambda() const { return lambda_H.value_or(lambda_A); }
  double hvu_sigma() const { return sigma_H.value_or(sigma_A); }

  /// Intensities may be zero (inert weapons); ranges must be positive.
  void validate() const;
};

/// Survival probabilities: Q per attacker; P[0] is the HVU, P[1..K] defenders.
struct SurvivalState {
  std::vector<double> Q;
  std::vector<double> P;

  static SurvivalState initial(std::size_t attackers, std::size_t defenders) {
    return {std::vector<double>(attackers, 1.0), std::vector<double>(defenders + 1, 1.0)};
  }
};

/// Isotropic Gaussian damage rate lambda * exp(-r^2 / (2 sigma^2)).
double damage_rate(double r, double lambda, double sigma);

/// Single-shot attrition right-hand side. Defenders (k >= 1) and the HVU
/// (k = 0) take damage; only defenders inflict it.
SurvivalState survival_rhs(const SurvivalState& s, std::span<const Vec3> attacker_pos,
                           std::span<const Vec3> defender_pos, const Vec3& hvu_pos,
                           const WeaponParams& w);

/// Accumulates (d rhs / d inputs)^T * (adj_Q, adj_P).
void survival_rhs_vjp(const SurvivalState& s, std::span<const Vec3> attacker_pos,
                      std::span<const Vec3> defender_pos, const Vec3& hvu_pos,
                      const WeaponParams& w, std::span<const double> adj_Q,
                      std::span<const double> adj_P, std::span<double> out_Q,
                      std::span<double> out_P, std::span<Vec3> out_attacker_pos,
                      std::span<Vec3> out_defender_pos);

/// Largest total damage rate any single agent is exposed to; bounds the
/// stable RK4 step for the survival channel.
double max_total_damage_rate(const SurvivalState& s, std::span<const Vec3> attacker_pos,
                             std::span<const Vec3> defender_pos, const Vec3& hvu_pos,
                             const WeaponParams& w);

}  // namespace swarmdef
