#pragma once

#include <Eigen/Core>

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace swarmdef {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

/// Pairwise evaluations closer than this are treated as coincident.
inline constexpr double kMinSeparation = 1e-9;

/// Raised when the forward or backward dynamics cannot be evaluated
/// (coincident agents, step-stability violation, non-finite costate).
/// Time, step and agent are -1 when unknown at the throw site.
class SimulationError : public std::runtime_error {
 public:
  explicit SimulationError(std::string detail, double time = -1.0, long step = -1, long agent = -1)
      : std::runtime_error(compose(detail, time, step, agent)),
        detail_(std::move(detail)), time_(time), step_(step), agent_(agent) {}

  const std::string& detail() const { return detail_; }
  double time() const { return time_; }
  long step() const { return step_; }
  long agent() const { return agent_; }

 private:
  static std::string compose(const std::string& detail, double time, long step, long agent) {
    std::string s = detail;
    if (time >= 0.0) s += " at t=" + std::to_string(time);
    if (step >= 0) s += " step=" + std::to_string(step);
    if (agent >= 0) s += " agent=" + std::to_string(agent);
    return s;
  }

  std::string detail_;
  double time_;
  long step_;
  long agent_;
};

/// Invalid configuration; the message names the offending field.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace swarmdef
