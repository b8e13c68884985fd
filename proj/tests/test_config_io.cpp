#include "desk.hpp"

#include "swarmdef/config.hpp"
#include "swarmdef/io.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

using namespace swarmdef;

namespace {

const char* kMinimal = R"({
  "scenario": {
    "attackers": 5, "defenders": 2, "t_final": 10, "dt": 0.02,
    "model": {"kind": "vbap"},
    "uncertain": {"name": "d0", "lower": 0.5, "upper": 1.5}
  }
})";

std::string with_scenario_field(const std::string& field) {
  return std::string(R"({"scenario": {"attackers": 5, "defenders": 2, "t_final": 10, "dt": 0.02, )") +
         field + R"(, "uncertain": {"name": "d0", "lower": 0.5, "upper": 1.5}}})";
}

std::string error_of(const std::string& text) {
  try {
    parse_config(text);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST(Config, MinimalDocumentUsesDefaults) {
  const RunConfig c = parse_config(kMinimal);
  EXPECT_EQ(c.scenario.attackers, 5);
  EXPECT_EQ(c.scenario.defenders, 2);
  EXPECT_EQ(c.scenario.dim, 3);
  EXPECT_EQ(c.scenario.u_max, 2.0);
  EXPECT_TRUE(std::holds_alternative<Model1Params>(c.scenario.model.params));
  EXPECT_EQ(c.scenario.uncertain.name, "d0");
  EXPECT_FALSE(c.scenario.uncertain.nominal.has_value());
  EXPECT_EQ(c.scheme, QuadratureScheme::Trapezoid);
  EXPECT_EQ(c.nodes, 11);
  EXPECT_EQ(c.sweep_grid, 21);
}

TEST(Config, MissingRequiredFieldIsNamed) {
  const std::string text = R"({"scenario": {"attackers": 5, "defenders": 2, "dt": 0.02,
    "model": {"kind": "vbap"}, "uncertain": {"name": "d0", "lower": 0.5, "upper": 1.5}}})";
  EXPECT_NE(error_of(text).find("scenario.t_final: missing required field"), std::string::npos);
}

TEST(Config, UnknownAndMistypedKeysAreNamed) {
  EXPECT_NE(error_of(with_scenario_field(R"("model": {"kind": "vbap", "dzero": 1})")).find("scenario.model.dzero: unknown key"),
            std::string::npos);
  EXPECT_NE(error_of(with_scenario_field(R"("model": {"kind": "vbap", "d0": "one"})")).find("scenario.model.d0: expected a number"),
            std::string::npos);
  EXPECT_NE(error_of(with_scenario_field(R"("model": {"kind": "lattice"})")).find("scenario.model.kind"),
            std::string::npos);
  EXPECT_NE(error_of("{not json").find("not valid JSON"), std::string::npos);
}

TEST(Config, SemanticErrorsArePrefixed) {
  const std::string text = R"({"scenario": {"attackers": 5, "defenders": 2, "t_final": 10, "dt": -1,
    "model": {"kind": "vbap"}, "uncertain": {"name": "d0", "lower": 0.5, "upper": 1.5}}})";
  EXPECT_EQ(error_of(text).rfind("scenario.", 0), 0u);
  const std::string bad_name = R"({"scenario": {"attackers": 5, "defenders": 2, "t_final": 10, "dt": 0.02,
    "model": {"kind": "vbap"}, "uncertain": {"name": "w_I", "lower": 3, "upper": 5}}})";
  EXPECT_NE(error_of(bad_name).find("alpha_h"), std::string::npos);
}

TEST(Config, DumpRoundTripsExactly) {
  RunConfig c;
  c.scenario = desk::scenario(true);
  c.scenario.hvu.velocity = Vec3(0.1, -0.3, 0.0);
  c.scenario.attacker_init.positions = {Vec3(1, 2, 3), Vec3(4, 5, 6), Vec3(7, 8, 9), Vec3(0.1, 0.2, 0.3),
                                        Vec3(1.0 / 3.0, 0, 0)};
  c.scheme = QuadratureScheme::GaussLegendre;
  c.nodes = 7;
  c.optimization = desk::optimization();
  c.sweep_grid = 9;
  const std::string a = dump_config(c);
  const RunConfig back = parse_config(a);
  EXPECT_EQ(dump_config(back), a);
  EXPECT_EQ(back.scenario.attacker_init.positions[4].x(), 1.0 / 3.0);
  EXPECT_EQ(config_hash(back), config_hash(c));
}

TEST(Config, HashIsStableAndSensitive) {
  RunConfig c = parse_config(kMinimal);
  const std::string h = config_hash(c);
  EXPECT_EQ(h.size(), 16u);
  EXPECT_EQ(h, config_hash(parse_config(kMinimal)));
  c.scenario.dt = 0.01;
  EXPECT_NE(config_hash(c), h);
}

TEST(Config, MissingFileIsConfigError) {
  EXPECT_THROW(load_config("/nonexistent/swarmdef.json"), ConfigError);
}

TEST(ControlCsv, RoundTripIsExact) {
  const ScenarioConfig cfg = desk::scenario();
  ControlSchedule c = desk::random_control(cfg, 7, 11);
  std::stringstream ss;
  write_control_csv(ss, c);
  const ControlSchedule back = read_control_csv(ss);
  EXPECT_EQ(back.segments, 7);
  EXPECT_EQ(back.defenders, cfg.defenders);
  EXPECT_EQ(back.t_final, cfg.t_final);
  for (std::size_t q = 0; q < c.knots.size(); ++q) EXPECT_EQ(back.knots[q], c.knots[q]);
}

TEST(ControlCsv, MalformedInputIsRejected) {
  std::istringstream bad_header("k,s,t,ux,uy,uz\n");
  EXPECT_THROW(read_control_csv(bad_header), ConfigError);
  std::istringstream short_row("defender,knot,t,ux,uy,uz\n0,0,0,1,2\n");
  EXPECT_THROW(read_control_csv(short_row), ConfigError);
  std::istringstream dup("defender,knot,t,ux,uy,uz\n0,0,0,0,0,0\n0,0,0,0,0,0\n0,1,1,0,0,0\n");
  EXPECT_THROW(read_control_csv(dup), ConfigError);
  std::istringstream missing("defender,knot,t,ux,uy,uz\n0,0,0,0,0,0\n0,1,1,0,0,0\n1,0,0,0,0,0\n");
  EXPECT_THROW(read_control_csv(missing), ConfigError);
  std::istringstream text("defender,knot,t,ux,uy,uz\n0,0,0,x,0,0\n");
  EXPECT_THROW(read_control_csv(text), ConfigError);
}

TEST(OutputCsv, Schemas) {
  std::ostringstream it;
  write_iteration_log_csv(it, {{0, 0.5, 0.25, 0.0}, {1, 0.375, 0.125, 1.0}});
  EXPECT_EQ(it.str(), "iteration,objective,gradient_norm,step\n0,0.5,0.25,0\n1,0.375,0.125,1\n");

  HamiltonianProfile p;
  p.times = {0.0, 0.5};
  p.values = {-0.25, 0.125};
  std::ostringstream prof;
  write_profile_csv(prof, p);
  EXPECT_EQ(prof.str(), "t,H_value\n0,-0.25\n0.5,0.125\n");

  ConvergenceRow ok;
  ok.M = 5;
  ok.max_abs_H = 0.5;
  ok.max_deviation_H = 0.25;
  ok.objective = 0.125;
  ok.iterations = 12;
  ok.status = "converged";
  ConvergenceRow bad;
  bad.M = 8;
  bad.status = "error: a, b";
  std::ostringstream conv;
  write_convergence_csv(conv, {ok, bad});
  EXPECT_EQ(conv.str(),
            "M,max_abs_H,max_deviation_H,objective,iterations,status\n"
            "5,0.5,0.25,0.125,12,converged\n"
            "8,0,0,0,0,\"error: a, b\"\n");
}
