// swarmdef: optimize defender controls, sweep them over a parameter range and
// check Hamiltonian convergence. See `swarmdef --help`.

#include "swarmdef/config.hpp"
#include "swarmdef/io.hpp"
#include "swarmdef/parallel.hpp"
#include "swarmdef/robustness.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>

namespace fs = std::filesystem;
using namespace swarmdef;
using ojson = nlohmann::ordered_json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitError = 1;
constexpr int kExitNotConverged = 2;

struct Common {
  std::string config_path;
  std::string out_dir = "out";
  int jobs = default_jobs();
  bool print_config = false;
  int nodes = 0;  // 0: take from config
  std::string scheme;
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("config", c.config_path, "JSON configuration file")->required();
  cmd->add_option("--out", c.out_dir, "Output directory")->capture_default_str();
  cmd->add_option("--jobs", c.jobs, "Worker threads (results do not depend on it)")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  cmd->add_flag("--print-config", c.print_config,
                "Print the resolved configuration as JSON and exit");
}

RunConfig resolve(const Common& c) {
  RunConfig cfg = load_config(c.config_path);
  if (c.nodes > 0) cfg.nodes = c.nodes;
  if (!c.scheme.empty()) cfg.scheme = parse_scheme(c.scheme);
  cfg.optimization.jobs = c.jobs;
  cfg.validate();
  return cfg;
}

class Manifest {
 public:
  Manifest(std::string command, const RunConfig& cfg) : start_(std::chrono::steady_clock::now()) {
    doc_["tool"] = "swarmdef";
    doc_["version"] = SWARMDEF_VERSION;
    doc_["command"] = std::move(command);
    doc_["config_hash"] = config_hash(cfg);
    doc_["scheme"] = to_string(cfg.scheme);
    doc_["M"] = cfg.nodes;
    const ScenarioConfig& s = cfg.scenario;
    doc_["scenario"] = {{"model", std::string(s.model.name())},
                        {"dim", s.dim},
                        {"attackers", s.attackers},
                        {"defenders", s.defenders},
                        {"t_final", s.t_final},
                        {"dt", s.dt},
                        {"uncertain", s.uncertain.name},
                        {"lower", s.uncertain.lower},
                        {"upper", s.uncertain.upper}};
    doc_["outputs"] = ojson::array();
    doc_["result"] = ojson::object();
  }

  ojson& result() { return doc_["result"]; }
  void add_output(const fs::path& p) { doc_["outputs"].push_back(p.filename().string()); }

  void mark(const std::string& phase) {
    const auto now = std::chrono::steady_clock::now();
    timings_[phase] = std::chrono::duration<double>(now - start_).count();
  }

  void write(const fs::path& dir) {
    mark("total");
    ojson out = doc_;
    out["timings_s"] = timings_;
    std::ofstream f(dir / "manifest.json");
    f << out.dump(2) << '\n';
  }

 private:
  ojson doc_;
  ojson timings_ = ojson::object();
  std::chrono::steady_clock::time_point start_;
};

template <typename Fn>
fs::path write_file(const fs::path& dir, const std::string& name, Manifest& m, Fn&& fn) {
  const fs::path p = dir / name;
  std::ofstream f(p);
  if (!f) throw std::runtime_error("cannot write " + p.string());
  fn(f);
  f.close();
  if (!f) throw std::runtime_error("error writing " + p.string());
  m.add_output(p);
  return p;
}

int cmd_optimize(const Common& c) {
  const RunConfig cfg = resolve(c);
  if (c.print_config) {
    std::cout << dump_config(cfg);
    return kExitOk;
  }
  const fs::path dir(c.out_dir);
  fs::create_directories(dir);
  Manifest m("optimize", cfg);

  const OptimalSolution sol = optimize(cfg.scenario, cfg.rule(), cfg.optimization);
  m.mark("optimize");

  write_file(dir, "control.csv", m, [&](std::ostream& o) { write_control_csv(o, sol.control); });
  write_file(dir, "iterations.csv", m, [&](std::ostream& o) { write_iteration_log_csv(o, sol.log); });
  m.result() = {{"status", to_string(sol.status)},
                {"objective", sol.objective_value},
                {"gradient_norm", sol.gradient_norm},
                {"iterations", sol.iterations}};
  m.write(dir);

  std::cout << "status=" << to_string(sol.status) << " objective=" << sol.objective_value
            << " gradient_norm=" << sol.gradient_norm << " iterations=" << sol.iterations << '\n';
  return sol.converged() ? kExitOk : kExitNotConverged;
}

struct SweepArgs {
  std::vector<std::string> controls;
  std::vector<std::string> labels;
  std::string param;
  int grid = 0;
  std::optional<double> lower;
  std::optional<double> upper;
  std::optional<double> nominal;
};

int cmd_sweep(const Common& c, const SweepArgs& a) {
  const RunConfig cfg = resolve(c);
  if (c.print_config) {
    std::cout << dump_config(cfg);
    return kExitOk;
  }
  const std::string name = a.param.empty() ? cfg.scenario.uncertain.name : a.param;
  const auto names = bindable_parameters(cfg.scenario.model);
  if (std::find(names.begin(), names.end(), name) == names.end()) {
    std::string list;
    for (const auto& n : names) list += (list.empty() ? "" : ", ") + n;
    throw ConfigError("--param '" + name + "' is not a bindable parameter; expected one of: " + list);
  }
  ParamDomain domain = cfg.scenario.uncertain;
  if (name != domain.name) {
    if (!a.lower || !a.upper) {
      throw ConfigError("--lower and --upper are required when --param differs from the "
                        "configured uncertain parameter");
    }
    domain = ParamDomain{name, *a.lower, *a.upper, PriorKind::Uniform,
                         get_parameter(cfg.scenario, name)};
  }
  if (a.lower) domain.lower = *a.lower;
  if (a.upper) domain.upper = *a.upper;
  if (a.nominal) domain.nominal = *a.nominal;
  if (domain.nominal && !domain.contains(*domain.nominal)) domain.nominal.reset();
  domain.validate();
  const int G = a.grid > 0 ? a.grid : cfg.sweep_grid;

  std::vector<ControlSchedule> controls;
  for (const auto& p : a.controls) controls.push_back(load_control_csv(p));
  std::vector<std::string> labels = a.labels;
  if (labels.empty()) {
    if (controls.size() == 1) labels = {"cost"};
    else if (controls.size() == 2) labels = {"nominal", "robust"};
    else for (std::size_t i = 0; i < controls.size(); ++i) labels.push_back("c" + std::to_string(i));
  }
  if (labels.size() != controls.size()) throw ConfigError("--labels needs one label per --control");

  const fs::path dir(c.out_dir);
  fs::create_directories(dir);
  Manifest m("sweep", cfg);
  const SweepResult r = sweep(controls, labels, domain, G, cfg.scenario, c.jobs);
  m.mark("sweep");
  write_file(dir, "sweep.csv", m, [&](std::ostream& o) { write_sweep_csv(o, r); });

  ojson curves = ojson::array();
  std::size_t failures = 0;
  for (std::size_t i = 0; i < r.labels.size(); ++i) {
    const CurveSummary s = summarize(r, i, domain);
    ojson errs = ojson::array();
    for (std::size_t g = 0; g < r.size(); ++g) {
      if (r.errors[i][g].empty()) continue;
      ++failures;
      errs.push_back({{"theta", r.thetas[g]}, {"error", r.errors[i][g]}});
      std::cerr << "warning: " << r.labels[i] << " at " << name << "=" << r.thetas[g] << ": "
                << r.errors[i][g] << '\n';
    }
    curves.push_back({{"label", s.label},
                      {"prior_mean", s.prior_mean},
                      {"worst", s.worst},
                      {"worst_theta", s.worst_theta},
                      {"errors", errs}});
    std::cout << s.label << ": prior_mean=" << s.prior_mean << " worst=" << s.worst << " at "
              << name << "=" << s.worst_theta << '\n';
  }
  m.result() = {{"parameter", name},
                {"lower", domain.lower},
                {"upper", domain.upper},
                {"grid", G},
                {"curves", curves}};
  m.write(dir);
  return failures == r.size() * r.labels.size() ? kExitError : kExitOk;
}

std::vector<int> parse_nodes_list(const std::string& s) {
  std::vector<int> out;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    tok.erase(0, tok.find_first_not_of(" \t"));
    tok.erase(tok.find_last_not_of(" \t") + 1);
    if (tok.empty()) continue;
    std::size_t pos = 0;
    int v = 0;
    try {
      v = std::stoi(tok, &pos);
    } catch (const std::exception&) {
      pos = 0;
    }
    if (pos != tok.size() || v < 1) throw ConfigError("--nodes-list: bad node count '" + tok + "'");
    out.push_back(v);
  }
  if (out.empty()) throw ConfigError("--nodes-list is empty");
  return out;
}

int cmd_hamiltonian(const Common& c, const std::string& nodes_list) {
  const RunConfig cfg = resolve(c);
  const std::vector<int> Ms = parse_nodes_list(nodes_list);
  if (c.print_config) {
    std::cout << dump_config(cfg);
    return kExitOk;
  }
  const fs::path dir(c.out_dir);
  fs::create_directories(dir);
  Manifest m("hamiltonian", cfg);
  const auto rows = hamiltonian_convergence(cfg.scenario, cfg.optimization, Ms, cfg.scheme);
  m.mark("hamiltonian");

  write_file(dir, "convergence.csv", m, [&](std::ostream& o) { write_convergence_csv(o, rows); });
  ojson res = ojson::array();
  int ok = 0;
  for (const auto& r : rows) {
    if (r.ok) {
      ++ok;
      write_file(dir, "hamiltonian_M" + std::to_string(r.M) + ".csv", m,
                 [&](std::ostream& o) { write_profile_csv(o, r.profile); });
    }
    res.push_back({{"M", r.M},
                   {"max_abs_H", r.max_abs_H},
                   {"max_deviation_H", r.max_deviation_H},
                   {"max_abs_H_normalized", r.profile.normalized_max_abs()},
                   {"max_deviation_H_normalized", r.profile.normalized_max_deviation()},
                   {"objective", r.objective},
                   {"iterations", r.iterations},
                   {"status", r.status}});
    std::cout << "M=" << r.M << " max_abs_H=" << r.max_abs_H << " objective=" << r.objective
              << " status=" << r.status << '\n';
  }
  m.result() = {{"rows", res}};
  m.write(dir);
  return ok > 0 ? kExitOk : kExitError;
}

int cmd_simulate(const Common& c, const std::string& control_path, int stride) {
  const RunConfig cfg = resolve(c);
  if (c.print_config) {
    std::cout << dump_config(cfg);
    return kExitOk;
  }
  ControlSchedule ctrl = control_path.empty()
                             ? ControlSchedule::zeros(cfg.scenario.t_final,
                                                      cfg.optimization.segments,
                                                      cfg.scenario.defenders)
                             : load_control_csv(control_path);
  const fs::path dir(c.out_dir);
  fs::create_directories(dir);
  Manifest m("simulate", cfg);
  const QuadratureRule rule = cfg.rule();
  const Trajectory traj = simulate_ensemble(ctrl, rule, cfg.scenario, c.jobs);
  m.mark("simulate");
  write_file(dir, "trajectory.csv", m,
             [&](std::ostream& o) { write_trajectory_csv(o, traj, cfg.scenario, stride); });

  std::vector<double> costs;
  for (const auto& node : traj.nodes) costs.push_back(terminal_cost(node.back()));
  const double J = integrate(rule, costs);
  m.result() = {{"objective", J}, {"node_costs", costs}};
  m.write(dir);
  std::cout << "objective=" << J << '\n';
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Defender control for protecting a high value unit against an attacking swarm"};
  app.require_subcommand(1);
  app.set_version_flag("--version", SWARMDEF_VERSION);

  Common common;

  auto* opt = app.add_subcommand("optimize", "Solve for defender controls");
  add_common(opt, common);
  opt->add_option("--nodes", common.nodes, "Quadrature node count M (overrides config)")
      ->check(CLI::PositiveNumber);
  opt->add_option("--scheme", common.scheme, "trapezoid | gauss-legendre");
  bool nominal = false;
  opt->add_flag("--nominal", nominal, "Optimize at the nominal parameter value (same as --nodes 1)");

  SweepArgs sw;
  auto* swc = app.add_subcommand("sweep", "Evaluate control schedules over a parameter grid");
  add_common(swc, common);
  swc->add_option("--control", sw.controls, "Control CSV; give two for a nominal/robust pair")
      ->required();
  swc->add_option("--labels", sw.labels, "Curve labels, one per control")->delimiter(',');
  swc->add_option("--param", sw.param, "Parameter to sweep (default: the configured one)");
  swc->add_option("--grid", sw.grid, "Grid size G (default: sweep.grid)")->check(CLI::PositiveNumber);
  swc->add_option("--lower", sw.lower, "Lower bound of the sweep");
  swc->add_option("--upper", sw.upper, "Upper bound of the sweep");
  swc->add_option("--nominal-value", sw.nominal, "Nominal value marker");

  std::string nodes_list;
  auto* ham = app.add_subcommand("hamiltonian", "Hamiltonian convergence across node counts");
  add_common(ham, common);
  ham->add_option("--nodes-list", nodes_list, "Comma-separated node counts, e.g. 5,8,11")->required();
  ham->add_option("--scheme", common.scheme, "trapezoid | gauss-legendre");

  std::string control_path;
  int stride = 1;
  auto* sim = app.add_subcommand("simulate", "Forward ensemble simulation and trajectory export");
  add_common(sim, common);
  sim->add_option("--control", control_path, "Control CSV (default: defenders hold station)");
  sim->add_option("--nodes", common.nodes, "Quadrature node count M (overrides config)")
      ->check(CLI::PositiveNumber);
  sim->add_option("--stride", stride, "Write every stride-th time step")->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitError;
  }

  try {
    if (opt->parsed()) {
      if (nominal) {
        if (common.nodes > 1) throw ConfigError("--nominal conflicts with --nodes " + std::to_string(common.nodes));
        common.nodes = 1;
      }
      return cmd_optimize(common);
    }
    if (swc->parsed()) return cmd_sweep(common, sw);
    if (ham->parsed()) return cmd_hamiltonian(common, nodes_list);
    if (sim->parsed()) return cmd_simulate(common, control_path, stride);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitError;
  }
  return kExitError;
}
