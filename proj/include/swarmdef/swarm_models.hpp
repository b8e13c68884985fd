#pragma once

#include "swarmdef/common.hpp"

#include <span>
#include <string_view>
#include <variant>

namespace swarmdef {

/// Virtual-body artificial potential swarm (Model 1). The defender herding
/// potential reuses the same law with range h1 = h0, so it is purely repulsive.
struct Model1Params {
  double alpha = 0.5;   // intra-swarm control gain
  double d0 = 1.0;      // potential minimum
  double d1 = 6.0;      // interaction cutoff
  double alpha_h = 6.0; // herding intensity
  double h0 = 3.0;      // herding range
  double K1 = 5.0;      // HVU tracking coefficient
  double K2 = 5.0;      // dissipative gain

  void validate() const;
};

/// Reynolds boids (Model 2) with a separate radius per force.
struct Model2Params {
  double r_al = 2.0;
  double w_al = 0.75;
  double r_coh = 2.0;
  double w_coh = 0.75;
  double r_sep = 1.0;
  double w_sep = 0.5;
  double r_I = 2.0;  // herding (defender separation) range
  double w_I = 4.5;  // herding intensity
  double K1 = 5.0;

  void validate() const;
};

enum class SwarmModelKind { VBAP, Reynolds };

struct SwarmModel {
  std::variant<Model1Params, Model2Params> params;

  SwarmModelKind kind() const {
    return params.index() == 0 ? SwarmModelKind::VBAP : SwarmModelKind::Reynolds;
  }
  std::string_view name() const { return kind() == SwarmModelKind::VBAP ? "vbap" : "reynolds"; }
};

/// Read-only view of the engagement geometry seen by the swarm control law.
struct SwarmGeometry {
  std::span<const Vec3> attacker_pos;
  std::span<const Vec3> attacker_vel;
  std::span<const Vec3> defender_pos;
  Vec3 hvu_pos = Vec3::Zero();
  double tracking_core = 0.0;
};

/// Interaction magnitude f_I(r) = alpha (1/r - d0/r^2) for r < d1, else 0.
double vbap_force_magnitude(double r, double alpha, double d0, double d1);

/// -(f_I(r)/r) (xi - xj): repulsive inside d0, attractive on (d0, d1).
Vec3 vbap_pair_force(const Vec3& xi, const Vec3& xj, double alpha, double d0, double d1);

/// Jacobian of vbap_pair_force with respect to xi (symmetric; -J w.r.t. xj).
Mat3 vbap_pair_jacobian(const Vec3& xi, const Vec3& xj, double alpha, double d0, double d1);

/// Constant-magnitude pull toward the HVU: -K1 (xi - y0)/|xi - y0|. Inside
/// an optional core radius the pull falls off linearly, -K1 (xi - y0)/core,
/// so an attacker parked on the HVU settles instead of chattering across it.
Vec3 hvu_tracking_force(const Vec3& xi, const Vec3& y0, double K1, double core = 0.0);
Mat3 hvu_tracking_jacobian(const Vec3& xi, const Vec3& y0, double K1, double core = 0.0);

/// Indices j != i with |x_i - x_j| < r, ascending.
std::vector<std::size_t> neighbor_set(std::size_t i, std::span<const Vec3> positions, double r);

Vec3 vbap_control(std::size_t i, const SwarmGeometry& g, const Model1Params& p);
Vec3 reynolds_control(std::size_t i, const SwarmGeometry& g, const Model2Params& p);
Vec3 swarm_control(std::size_t i, const SwarmGeometry& g, const SwarmModel& model);

/// Cotangents of the swarm control law. swarm_control_vjp accumulates
/// (d u_i / d state)^T * adj_i into the three output arrays; neighbor-set
/// membership and force cutoffs are treated as locally constant.
struct SwarmCotangent {
  std::span<Vec3> attacker_pos;
  std::span<Vec3> attacker_vel;
  std::span<Vec3> defender_pos;
};

void swarm_control_vjp(std::size_t i, const SwarmGeometry& g, const SwarmModel& model,
                       const Vec3& adj_i, const SwarmCotangent& out);

}  // namespace swarmdef
