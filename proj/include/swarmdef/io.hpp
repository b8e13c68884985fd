#pragma once

#include "swarmdef/adjoint.hpp"

#include <iosfwd>
#include <string>

namespace swarmdef {

/// defender,knot,t,ux,uy,uz; one row per knot, defender-major.
void write_control_csv(std::ostream& out, const ControlSchedule& ctrl);
/// Inverse of write_control_csv. Throws ConfigError on malformed input.
ControlSchedule read_control_csv(std::istream& in);
ControlSchedule load_control_csv(const std::string& path);

/// iteration,objective,gradient_norm,step
void write_iteration_log_csv(std::ostream& out, const std::vector<IterationRecord>& log);

/// t,H_value
void write_profile_csv(std::ostream& out, const HamiltonianProfile& profile);

/// M,max_abs_H,max_deviation_H,objective,iterations,status
void write_convergence_csv(std::ostream& out, const std::vector<ConvergenceRow>& rows);

}  // namespace swarmdef
