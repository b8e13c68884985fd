#include "swarmdef/config.hpp"

#include <nlohmann/json.hpp>

#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

namespace swarmdef {
namespace {

using json = nlohmann::json;
using ojson = nlohmann::ordered_json;

// Walks one JSON object, remembering which keys were consumed so leftovers
// can be reported as unknown.
class Reader {
 public:
  Reader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) fail("", "expected an object");
  }

  [[noreturn]] void fail(const std::string& key, const std::string& what) const {
    throw ConfigError(where(key) + ": " + what);
  }

  std::string where(const std::string& key) const {
    if (key.empty()) return path_.empty() ? "<root>" : path_;
    return path_.empty() ? key : path_ + "." + key;
  }

  const json* find(const std::string& key, bool required) {
    used_.insert(key);
    auto it = j_.find(key);
    if (it == j_.end() || it->is_null()) {
      if (required) fail(key, "missing required field");
      return nullptr;
    }
    return &*it;
  }

  void number(const std::string& key, double& out, bool required = false) {
    if (const json* v = find(key, required)) {
      if (!v->is_number()) fail(key, "expected a number");
      out = v->get<double>();
    }
  }

  void optional_number(const std::string& key, std::optional<double>& out) {
    if (const json* v = find(key, false)) {
      if (!v->is_number()) fail(key, "expected a number");
      out = v->get<double>();
    }
  }

  template <typename Int>
  void integer(const std::string& key, Int& out, bool required = false) {
    if (const json* v = find(key, required)) {
      if (!v->is_number_integer()) fail(key, "expected an integer");
      if (v->is_number_unsigned()) {
        out = static_cast<Int>(v->get<std::uint64_t>());
      } else {
        const auto x = v->get<std::int64_t>();
        if constexpr (std::is_unsigned_v<Int>) {
          if (x < 0) fail(key, "expected a non-negative integer");
        }
        out = static_cast<Int>(x);
      }
    }
  }

  void string(const std::string& key, std::string& out, bool required = false) {
    if (const json* v = find(key, required)) {
      if (!v->is_string()) fail(key, "expected a string");
      out = v->get<std::string>();
    }
  }

  static bool is_vec3(const json& v) {
    return v.is_array() && v.size() == 3 && v[0].is_number() && v[1].is_number() && v[2].is_number();
  }

  void vec3(const std::string& key, Vec3& out) {
    if (const json* v = find(key, false)) {
      if (!is_vec3(*v)) fail(key, "expected [x, y, z]");
      out = Vec3((*v)[0].get<double>(), (*v)[1].get<double>(), (*v)[2].get<double>());
    }
  }

  void vec3_list(const std::string& key, std::vector<Vec3>& out) {
    if (const json* v = find(key, false)) {
      if (!v->is_array()) fail(key, "expected a list of [x, y, z]");
      out.clear();
      for (std::size_t i = 0; i < v->size(); ++i) {
        const json& e = (*v)[i];
        if (!is_vec3(e)) fail(key + "[" + std::to_string(i) + "]", "expected [x, y, z]");
        out.emplace_back(e[0].get<double>(), e[1].get<double>(), e[2].get<double>());
      }
    }
  }

  std::optional<Reader> child(const std::string& key, bool required = false) {
    if (const json* v = find(key, required)) return Reader(*v, where(key));
    return std::nullopt;
  }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it) {
      if (!used_.count(it.key())) fail(it.key(), "unknown key");
    }
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> used_;
};

void read_model(Reader& r, SwarmModel& model) {
  std::string kind;
  r.string("kind", kind, true);
  if (kind == "vbap" || kind == "model1") {
    Model1Params p;
    r.number("alpha", p.alpha);
    r.number("d0", p.d0);
    r.number("d1", p.d1);
    r.number("alpha_h", p.alpha_h);
    r.number("h0", p.h0);
    r.number("K1", p.K1);
    r.number("K2", p.K2);
    model.params = p;
  } else if (kind == "reynolds" || kind == "model2") {
    Model2Params p;
    r.number("r_al", p.r_al);
    r.number("w_al", p.w_al);
    r.number("r_coh", p.r_coh);
    r.number("w_coh", p.w_coh);
    r.number("r_sep", p.r_sep);
    r.number("w_sep", p.w_sep);
    r.number("r_I", p.r_I);
    r.number("w_I", p.w_I);
    r.number("K1", p.K1);
    model.params = p;
  } else {
    r.fail("kind", "expected \"vbap\" or \"reynolds\", got \"" + kind + "\"");
  }
  r.finish();
}

void read_scenario(Reader& r, ScenarioConfig& s) {
  r.integer("dim", s.dim);
  r.integer("attackers", s.attackers, true);
  r.integer("defenders", s.defenders, true);
  r.number("t_final", s.t_final, true);
  r.number("dt", s.dt, true);
  r.number("u_max", s.u_max);
  r.number("tracking_core", s.tracking_core);
  r.integer("seed", s.attacker_init.seed);

  auto model = r.child("model", true);
  read_model(*model, s.model);

  if (auto w = r.child("weapons")) {
    w->number("lambda_D", s.weapons.lambda_D);
    w->number("sigma_D", s.weapons.sigma_D);
    w->number("lambda_A", s.weapons.lambda_A);
    w->number("sigma_A", s.weapons.sigma_A);
    w->optional_number("lambda_H", s.weapons.lambda_H);
    w->optional_number("sigma_H", s.weapons.sigma_H);
    w->finish();
  }
  if (auto h = r.child("hvu")) {
    h->vec3("position", s.hvu.position);
    h->vec3("velocity", s.hvu.velocity);
    h->finish();
  }
  if (auto a = r.child("attacker_init")) {
    a->number("standoff", s.attacker_init.standoff);
    a->number("spacing", s.attacker_init.spacing);
    a->number("jitter", s.attacker_init.jitter);
    a->vec3("direction", s.attacker_init.direction);
    a->vec3_list("positions", s.attacker_init.positions);
    a->vec3_list("velocities", s.attacker_init.velocities);
    a->finish();
  }
  if (auto d = r.child("defender_init")) {
    d->number("radius", s.defender_init.radius);
    d->vec3_list("positions", s.defender_init.positions);
    d->finish();
  }
  auto u = r.child("uncertain", true);
  u->string("name", s.uncertain.name, true);
  u->number("lower", s.uncertain.lower, true);
  u->number("upper", s.uncertain.upper, true);
  std::string prior = "uniform";
  u->string("prior", prior);
  if (prior != "uniform") u->fail("prior", "only \"uniform\" is supported");
  s.uncertain.prior = PriorKind::Uniform;
  s.uncertain.nominal.reset();
  u->optional_number("nominal", s.uncertain.nominal);
  u->finish();
  r.finish();
}

ojson vec3_json(const Vec3& v) { return ojson::array({v.x(), v.y(), v.z()}); }

ojson vec3_list_json(const std::vector<Vec3>& list) {
  ojson a = ojson::array();
  for (const Vec3& v : list) a.push_back(vec3_json(v));
  return a;
}

ojson model_json(const SwarmModel& model) {
  ojson m;
  if (const auto* p = std::get_if<Model1Params>(&model.params)) {
    m["kind"] = "vbap";
    m["alpha"] = p->alpha;
    m["d0"] = p->d0;
    m["d1"] = p->d1;
    m["alpha_h"] = p->alpha_h;
    m["h0"] = p->h0;
    m["K1"] = p->K1;
    m["K2"] = p->K2;
  } else {
    const auto& q = std::get<Model2Params>(model.params);
    m["kind"] = "reynolds";
    m["r_al"] = q.r_al;
    m["w_al"] = q.w_al;
    m["r_coh"] = q.r_coh;
    m["w_coh"] = q.w_coh;
    m["r_sep"] = q.r_sep;
    m["w_sep"] = q.w_sep;
    m["r_I"] = q.r_I;
    m["w_I"] = q.w_I;
    m["K1"] = q.K1;
  }
  return m;
}

}  // namespace

void RunConfig::validate() const {
  try {
    scenario.validate();
  } catch (const ConfigError& e) {
    throw ConfigError(std::string("scenario.") + e.what());
  }
  optimization.validate();
  if (nodes < 1) throw ConfigError("quadrature.nodes must be >= 1");
  if (sweep_grid < 1) throw ConfigError("sweep.grid must be >= 1");
  const std::size_t knots = static_cast<std::size_t>(scenario.defenders) * (optimization.segments + 1);
  if (!optimization.initial_knots.empty() && optimization.initial_knots.size() != knots) {
    throw ConfigError("optimization.initial_knots must have defenders * (segments + 1) entries");
  }
}

RunConfig parse_config(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  RunConfig cfg;
  Reader root(doc, "");
  auto scenario = root.child("scenario", true);
  read_scenario(*scenario, cfg.scenario);

  if (auto q = root.child("quadrature")) {
    std::string scheme = to_string(cfg.scheme);
    q->string("scheme", scheme);
    try {
      cfg.scheme = parse_scheme(scheme);
    } catch (const ConfigError& e) {
      q->fail("scheme", e.what());
    }
    q->integer("nodes", cfg.nodes);
    q->finish();
  }
  if (auto o = root.child("optimization")) {
    o->integer("max_iterations", cfg.optimization.max_iterations);
    o->number("gradient_tolerance", cfg.optimization.gradient_tolerance);
    o->number("armijo", cfg.optimization.armijo);
    o->number("backtrack", cfg.optimization.backtrack);
    o->integer("max_backtracks", cfg.optimization.max_backtracks);
    o->integer("segments", cfg.optimization.segments);
    o->vec3_list("initial_knots", cfg.optimization.initial_knots);
    o->finish();
  }
  if (auto s = root.child("sweep")) {
    s->integer("grid", cfg.sweep_grid);
    s->finish();
  }
  root.finish();
  cfg.validate();
  return cfg;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string dump_config(const RunConfig& cfg) {
  const ScenarioConfig& s = cfg.scenario;
  ojson sc;
  sc["dim"] = s.dim;
  sc["attackers"] = s.attackers;
  sc["defenders"] = s.defenders;
  sc["t_final"] = s.t_final;
  sc["dt"] = s.dt;
  sc["u_max"] = s.u_max;
  sc["tracking_core"] = s.tracking_core;
  sc["seed"] = s.attacker_init.seed;
  sc["model"] = model_json(s.model);

  ojson w;
  w["lambda_D"] = s.weapons.lambda_D;
  w["sigma_D"] = s.weapons.sigma_D;
  w["lambda_A"] = s.weapons.lambda_A;
  w["sigma_A"] = s.weapons.sigma_A;
  if (s.weapons.lambda_H) w["lambda_H"] = *s.weapons.lambda_H;
  if (s.weapons.sigma_H) w["sigma_H"] = *s.weapons.sigma_H;
  sc["weapons"] = w;

  sc["hvu"] = {{"position", vec3_json(s.hvu.position)}, {"velocity", vec3_json(s.hvu.velocity)}};

  ojson a;
  a["standoff"] = s.attacker_init.standoff;
  a["spacing"] = s.attacker_init.spacing;
  a["jitter"] = s.attacker_init.jitter;
  a["direction"] = vec3_json(s.attacker_init.direction);
  if (!s.attacker_init.positions.empty()) a["positions"] = vec3_list_json(s.attacker_init.positions);
  if (!s.attacker_init.velocities.empty()) a["velocities"] = vec3_list_json(s.attacker_init.velocities);
  sc["attacker_init"] = a;

  ojson d;
  d["radius"] = s.defender_init.radius;
  if (!s.defender_init.positions.empty()) d["positions"] = vec3_list_json(s.defender_init.positions);
  sc["defender_init"] = d;

  ojson u;
  u["name"] = s.uncertain.name;
  u["lower"] = s.uncertain.lower;
  u["upper"] = s.uncertain.upper;
  u["prior"] = "uniform";
  if (s.uncertain.nominal) u["nominal"] = *s.uncertain.nominal;
  sc["uncertain"] = u;

  ojson root;
  root["scenario"] = sc;
  root["quadrature"] = {{"scheme", to_string(cfg.scheme)}, {"nodes", cfg.nodes}};
  ojson o;
  o["max_iterations"] = cfg.optimization.max_iterations;
  o["gradient_tolerance"] = cfg.optimization.gradient_tolerance;
  o["armijo"] = cfg.optimization.armijo;
  o["backtrack"] = cfg.optimization.backtrack;
  o["max_backtracks"] = cfg.optimization.max_backtracks;
  o["segments"] = cfg.optimization.segments;
  if (!cfg.optimization.initial_knots.empty()) {
    o["initial_knots"] = vec3_list_json(cfg.optimization.initial_knots);
  }
  root["optimization"] = o;
  root["sweep"] = {{"grid", cfg.sweep_grid}};
  return root.dump(2) + "\n";
}

std::string config_hash(const RunConfig& cfg) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : dump_config(cfg)) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace swarmdef
