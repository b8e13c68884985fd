#include "swarmdef/io.hpp"

#include "swarmdef/csv.hpp"

#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>

namespace swarmdef {
namespace {

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  return out;
}

double parse_real(const std::string& s, std::size_t line) {
  std::size_t pos = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (pos == 0 || pos != s.size()) {
    throw ConfigError("control file line " + std::to_string(line) + ": bad number '" + s + "'");
  }
  return v;
}

}  // namespace

void write_control_csv(std::ostream& out, const ControlSchedule& ctrl) {
  out << "defender,knot,t,ux,uy,uz\n";
  for (int k = 0; k < ctrl.defenders; ++k) {
    for (int s = 0; s <= ctrl.segments; ++s) {
      const double t = s == ctrl.segments ? ctrl.t_final : ctrl.t_final * s / ctrl.segments;
      const Vec3& u = ctrl.knot(k, s);
      out << k << ',' << s << ',' << fmt_real(t) << ',' << fmt_real(u.x()) << ','
          << fmt_real(u.y()) << ',' << fmt_real(u.z()) << '\n';
    }
  }
}

ControlSchedule read_control_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != "defender,knot,t,ux,uy,uz") {
    throw ConfigError("control file: expected header defender,knot,t,ux,uy,uz");
  }
  std::map<std::pair<int, int>, Vec3> knots;
  int max_k = -1;
  int max_s = -1;
  double t_final = 0.0;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto cells = split(line);
    if (cells.size() != 6) {
      throw ConfigError("control file line " + std::to_string(lineno) + ": expected 6 columns");
    }
    const double kd = parse_real(cells[0], lineno);
    const double sd = parse_real(cells[1], lineno);
    if (kd < 0 || sd < 0 || kd != std::floor(kd) || sd != std::floor(sd)) {
      throw ConfigError("control file line " + std::to_string(lineno) + ": bad index");
    }
    const int k = static_cast<int>(kd);
    const int s = static_cast<int>(sd);
    const double t = parse_real(cells[2], lineno);
    const Vec3 u(parse_real(cells[3], lineno), parse_real(cells[4], lineno),
                 parse_real(cells[5], lineno));
    if (!knots.emplace(std::make_pair(k, s), u).second) {
      throw ConfigError("control file line " + std::to_string(lineno) + ": duplicate knot");
    }
    max_k = std::max(max_k, k);
    if (s > max_s) {
      max_s = s;
      t_final = t;
    }
  }
  if (max_k < 0 || max_s < 1) throw ConfigError("control file: no knots");
  ControlSchedule ctrl = ControlSchedule::zeros(t_final, max_s, max_k + 1);
  if (knots.size() != ctrl.knots.size()) {
    throw ConfigError("control file: expected " + std::to_string(ctrl.knots.size()) +
                      " knots, found " + std::to_string(knots.size()));
  }
  for (const auto& [key, u] : knots) ctrl.knot(key.first, key.second) = u;
  return ctrl;
}

ControlSchedule load_control_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open control file '" + path + "'");
  return read_control_csv(in);
}

void write_iteration_log_csv(std::ostream& out, const std::vector<IterationRecord>& log) {
  out << "iteration,objective,gradient_norm,step\n";
  for (const auto& r : log) {
    out << r.iteration << ',' << fmt_real(r.objective) << ',' << fmt_real(r.gradient_norm) << ','
        << fmt_real(r.step) << '\n';
  }
}

void write_profile_csv(std::ostream& out, const HamiltonianProfile& profile) {
  out << "t,H_value\n";
  for (std::size_t n = 0; n < profile.times.size(); ++n) {
    out << fmt_real(profile.times[n]) << ',' << fmt_real(profile.values[n]) << '\n';
  }
}

void write_convergence_csv(std::ostream& out, const std::vector<ConvergenceRow>& rows) {
  out << "M,max_abs_H,max_deviation_H,objective,iterations,status\n";
  for (const auto& r : rows) {
    out << r.M << ',' << fmt_real(r.max_abs_H) << ',' << fmt_real(r.max_deviation_H) << ','
        << fmt_real(r.objective) << ',' << r.iterations << ',' << csv_text(r.status) << '\n';
  }
}

}  // namespace swarmdef
