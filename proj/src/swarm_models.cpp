#include "swarmdef/swarm_models.hpp"

#include <cmath>

namespace swarmdef {
namespace {

void require_positive(double v, const char* field) {
  if (!(v > 0.0) || !std::isfinite(v)) {
    throw ConfigError(std::string(field) + " must be a positive finite number");
  }
}

[[noreturn]] void throw_coincident(const char* what) {
  throw SimulationError(std::string("coincident points in ") + what);
}

double checked_distance(const Vec3& d, const char* what) {
  const double r = d.norm();
  if (!(r >= kMinSeparation)) throw_coincident(what);
  return r;
}

// d(u_i)/d(e) for the unit vector e/|e|, scaled by -w/n: the separation
// force's Jacobian with respect to the neighbor position.
Mat3 separation_block(const Vec3& e, double r, double scale) {
  const Vec3 n = e / r;
  return scale * (Mat3::Identity() - n * n.transpose()) / r;
}

}  // namespace

void Model1Params::validate() const {
  require_positive(alpha, "model.alpha");
  require_positive(d0, "model.d0");
  require_positive(d1, "model.d1");
  require_positive(alpha_h, "model.alpha_h");
  require_positive(h0, "model.h0");
  require_positive(K1, "model.K1");
  require_positive(K2, "model.K2");
  if (!(d0 < d1)) throw ConfigError("model.d0 must be smaller than model.d1");
}

void Model2Params::validate() const {
  require_positive(r_al, "model.r_al");
  require_positive(w_al, "model.w_al");
  require_positive(r_coh, "model.r_coh");
  require_positive(w_coh, "model.w_coh");
  require_positive(r_sep, "model.r_sep");
  require_positive(w_sep, "model.w_sep");
  require_positive(r_I, "model.r_I");
  require_positive(w_I, "model.w_I");
  require_positive(K1, "model.K1");
}

double vbap_force_magnitude(double r, double alpha, double d0, double d1) {
  if (r >= d1) return 0.0;
  return alpha * (1.0 / r - d0 / (r * r));
}

Vec3 vbap_pair_force(const Vec3& xi, const Vec3& xj, double alpha, double d0, double d1) {
  const Vec3 d = xi - xj;
  const double r = checked_distance(d, "pair force");
  if (r >= d1) return Vec3::Zero();
  return -(vbap_force_magnitude(r, alpha, d0, d1) / r) * d;
}

Mat3 vbap_pair_jacobian(const Vec3& xi, const Vec3& xj, double alpha, double d0, double d1) {
  const Vec3 d = xi - xj;
  const double r = checked_distance(d, "pair force");
  if (r >= d1) return Mat3::Zero();
  const double r2 = r * r;
  const double r3 = r2 * r;
  const double phi = alpha * (1.0 / r2 - d0 / r3);
  const double dphi = alpha * (-2.0 / r3 + 3.0 * d0 / (r3 * r));
  return -phi * Mat3::Identity() - (dphi / r) * (d * d.transpose());
}

Vec3 hvu_tracking_force(const Vec3& xi, const Vec3& y0, double K1, double core) {
  const Vec3 d = xi - y0;
  const double r = checked_distance(d, "HVU tracking");
  if (r < core) return -(K1 / core) * d;
  return -(K1 / r) * d;
}

Mat3 hvu_tracking_jacobian(const Vec3& xi, const Vec3& y0, double K1, double core) {
  const Vec3 d = xi - y0;
  const double r = checked_distance(d, "HVU tracking");
  if (r < core) return -(K1 / core) * Mat3::Identity();
  return -K1 * (Mat3::Identity() / r - (d * d.transpose()) / (r * r * r));
}

std::vector<std::size_t> neighbor_set(std::size_t i, std::span<const Vec3> positions, double r) {
  std::vector<std::size_t> out;
  for (std::size_t j = 0; j < positions.size(); ++j) {
    if (j != i && (positions[i] - positions[j]).norm() < r) out.push_back(j);
  }
  return out;
}

Vec3 vbap_control(std::size_t i, const SwarmGeometry& g, const Model1Params& p) {
  const Vec3& xi = g.attacker_pos[i];
  Vec3 u = Vec3::Zero();
  for (std::size_t j = 0; j < g.attacker_pos.size(); ++j) {
    if (j == i) continue;
    u += vbap_pair_force(xi, g.attacker_pos[j], p.alpha, p.d0, p.d1);
  }
  for (const Vec3& yk : g.defender_pos) {
    u += vbap_pair_force(xi, yk, p.alpha_h, p.h0, p.h0);
  }
  u += hvu_tracking_force(xi, g.hvu_pos, p.K1, g.tracking_core);
  u -= p.K2 * g.attacker_vel[i];
  return u;
}

Vec3 reynolds_control(std::size_t i, const SwarmGeometry& g, const Model2Params& p) {
  const Vec3& xi = g.attacker_pos[i];
  Vec3 u = Vec3::Zero();

  if (const auto nb = neighbor_set(i, g.attacker_pos, p.r_al); !nb.empty()) {
    Vec3 mean = Vec3::Zero();
    for (std::size_t j : nb) mean += g.attacker_vel[j];
    mean /= static_cast<double>(nb.size());
    u += -p.w_al * (g.attacker_vel[i] - mean);
  }
  if (const auto nb = neighbor_set(i, g.attacker_pos, p.r_coh); !nb.empty()) {
    Vec3 mean = Vec3::Zero();
    for (std::size_t j : nb) mean += g.attacker_pos[j];
    mean /= static_cast<double>(nb.size());
    u += -p.w_coh * (xi - mean);
  }
  if (const auto nb = neighbor_set(i, g.attacker_pos, p.r_sep); !nb.empty()) {
    Vec3 sum = Vec3::Zero();
    for (std::size_t j : nb) {
      const Vec3 e = g.attacker_pos[j] - xi;
      sum += e / checked_distance(e, "separation");
    }
    u += -p.w_sep / static_cast<double>(nb.size()) * sum;
  }

  // Herding: separation from the defenders inside r_I.
  Vec3 sum = Vec3::Zero();
  std::size_t count = 0;
  for (const Vec3& yk : g.defender_pos) {
    const Vec3 e = yk - xi;
    if (e.norm() < p.r_I) {
      sum += e / checked_distance(e, "herding");
      ++count;
    }
  }
  if (count > 0) u += -p.w_I / static_cast<double>(count) * sum;

  u += hvu_tracking_force(xi, g.hvu_pos, p.K1, g.tracking_core);
  return u;
}

Vec3 swarm_control(std::size_t i, const SwarmGeometry& g, const SwarmModel& model) {
  if (const auto* m1 = std::get_if<Model1Params>(&model.params)) return vbap_control(i, g, *m1);
  return reynolds_control(i, g, std::get<Model2Params>(model.params));
}

void swarm_control_vjp(std::size_t i, const SwarmGeometry& g, const SwarmModel& model,
                       const Vec3& adj, const SwarmCotangent& out) {
  const Vec3& xi = g.attacker_pos[i];

  if (const auto* p = std::get_if<Model1Params>(&model.params)) {
    for (std::size_t j = 0; j < g.attacker_pos.size(); ++j) {
      if (j == i) continue;
      const Vec3 l = vbap_pair_jacobian(xi, g.attacker_pos[j], p->alpha, p->d0, p->d1) * adj;
      out.attacker_pos[i] += l;
      out.attacker_pos[j] -= l;
    }
    for (std::size_t k = 0; k < g.defender_pos.size(); ++k) {
      const Vec3 l = vbap_pair_jacobian(xi, g.defender_pos[k], p->alpha_h, p->h0, p->h0) * adj;
      out.attacker_pos[i] += l;
      out.defender_pos[k] -= l;
    }
    out.attacker_pos[i] += hvu_tracking_jacobian(xi, g.hvu_pos, p->K1, g.tracking_core) * adj;
    out.attacker_vel[i] -= p->K2 * adj;
    return;
  }

  const auto& p = std::get<Model2Params>(model.params);
  if (const auto nb = neighbor_set(i, g.attacker_pos, p.r_al); !nb.empty()) {
    const double share = p.w_al / static_cast<double>(nb.size());
    out.attacker_vel[i] -= p.w_al * adj;
    for (std::size_t j : nb) out.attacker_vel[j] += share * adj;
  }
  if (const auto nb = neighbor_set(i, g.attacker_pos, p.r_coh); !nb.empty()) {
    const double share = p.w_coh / static_cast<double>(nb.size());
    out.attacker_pos[i] -= p.w_coh * adj;
    for (std::size_t j : nb) out.attacker_pos[j] += share * adj;
  }
  if (const auto nb = neighbor_set(i, g.attacker_pos, p.r_sep); !nb.empty()) {
    const double scale = -p.w_sep / static_cast<double>(nb.size());
    for (std::size_t j : nb) {
      const Vec3 e = g.attacker_pos[j] - xi;
      const Vec3 l = separation_block(e, checked_distance(e, "separation"), scale) * adj;
      out.attacker_pos[j] += l;
      out.attacker_pos[i] -= l;
    }
  }
  std::size_t count = 0;
  for (const Vec3& yk : g.defender_pos) {
    if ((yk - xi).norm() < p.r_I) ++count;
  }
  if (count > 0) {
    const double scale = -p.w_I / static_cast<double>(count);
    for (std::size_t k = 0; k < g.defender_pos.size(); ++k) {
      const Vec3 e = g.defender_pos[k] - xi;
      if (e.norm() >= p.r_I) continue;
      const Vec3 l = separation_block(e, checked_distance(e, "herding"), scale) * adj;
      out.defender_pos[k] += l;
      out.attacker_pos[i] -= l;
    }
  }
  out.attacker_pos[i] += hvu_tracking_jacobian(xi, g.hvu_pos, p.K1, g.tracking_core) * adj;
}

}  // namespace swarmdef
