// Drives the swarmdef executable end to end.

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include <sys/wait.h>
#include <unistd.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace fs = std::filesystem;

namespace {

const char* kConfig = R"({
  "scenario": {
    "attackers": 5, "defenders": 2, "t_final": 4, "dt": 0.02,
    "model": {"kind": "vbap"},
    "weapons": {"lambda_D": 0.3, "lambda_H": 0.5, "sigma_H": 1.0},
    "attacker_init": {"standoff": 4},
    "defender_init": {"positions": [[2, 1, 0], [2, -1, 0]]},
    "uncertain": {"name": "d0", "lower": 0.5, "upper": 1.5, "nominal": 1.0}
  },
  "quadrature": {"nodes": 3},
  "optimization": {"segments": 4, "max_iterations": 40},
  "sweep": {"grid": 5}
})";

struct Result {
  int code = -1;
  std::string out;
  std::string err;
};

std::string slurp(const fs::path& p) {
  std::ifstream f(p);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    dir_ = fs::temp_directory_path() /
           ("swarmdef_cli_" + std::to_string(::getpid()) + "_" + info->name());
    fs::remove_all(dir_);
    fs::create_directories(dir_);
    config_ = dir_ / "config.json";
    std::ofstream(config_) << kConfig;
  }
  void TearDown() override { fs::remove_all(dir_); }

  Result run(const std::string& args) {
    const fs::path out = dir_ / "stdout.txt";
    const fs::path err = dir_ / "stderr.txt";
    const std::string cmd = std::string("\"") + SWARMDEF_CLI + "\" " + args + " >\"" + out.string() +
                            "\" 2>\"" + err.string() + "\"";
    const int status = std::system(cmd.c_str());
    Result r;
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    r.out = slurp(out);
    r.err = slurp(err);
    return r;
  }

  std::string cfg() const { return "\"" + config_.string() + "\""; }
  std::string out(const std::string& name) const { return "--out \"" + (dir_ / name).string() + "\""; }

  fs::path dir_;
  fs::path config_;
};

nlohmann::json manifest(const fs::path& dir) { return nlohmann::json::parse(slurp(dir / "manifest.json")); }

}  // namespace

TEST_F(Cli, MissingRequiredFieldNamesIt) {
  std::ofstream(dir_ / "bad.json") << R"({"scenario": {"attackers": 5, "defenders": 2, "dt": 0.02,
    "model": {"kind": "vbap"}, "uncertain": {"name": "d0", "lower": 0.5, "upper": 1.5}}})";
  const auto r = run("optimize \"" + (dir_ / "bad.json").string() + "\" " + out("o"));
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("scenario.t_final"), std::string::npos) << r.err;
}

TEST_F(Cli, OptimizeWritesOutputsAndRerunsIdentically) {
  const auto a = run("optimize " + cfg() + " --jobs 1 " + out("a"));
  ASSERT_TRUE(a.code == 0 || a.code == 2) << a.err;
  const auto b = run("optimize " + cfg() + " --jobs 3 " + out("b"));
  EXPECT_EQ(a.code, b.code);
  for (const char* f : {"control.csv", "iterations.csv"}) {
    EXPECT_EQ(slurp(dir_ / "a" / f), slurp(dir_ / "b" / f)) << f;
  }
  auto ma = manifest(dir_ / "a");
  auto mb = manifest(dir_ / "b");
  EXPECT_TRUE(ma.contains("timings_s"));
  ma.erase("timings_s");
  mb.erase("timings_s");
  EXPECT_EQ(ma, mb);
  EXPECT_EQ(ma["command"], "optimize");
  EXPECT_EQ(ma["M"], 3);
  for (const auto& f : ma["outputs"]) EXPECT_TRUE(fs::exists(dir_ / "a" / f.get<std::string>()));
  EXPECT_EQ(a.code == 0, ma["result"]["status"] == "converged");
}

TEST_F(Cli, NominalFlagEqualsSingleNode) {
  ASSERT_NE(run("optimize " + cfg() + " --nominal " + out("n")).code, 1);
  ASSERT_NE(run("optimize " + cfg() + " --nodes 1 " + out("m")).code, 1);
  EXPECT_EQ(slurp(dir_ / "n" / "control.csv"), slurp(dir_ / "m" / "control.csv"));
  EXPECT_EQ(manifest(dir_ / "n")["M"], 1);
  EXPECT_EQ(run("optimize " + cfg() + " --nominal --nodes 3 " + out("x")).code, 1);
}

TEST_F(Cli, IterationLimitExitsWithTwo) {
  std::string text = kConfig;
  text.replace(text.find("\"max_iterations\": 40"), 20, "\"max_iterations\": 1");
  std::ofstream(dir_ / "short.json") << text;
  const auto r = run("optimize \"" + (dir_ / "short.json").string() + "\" " + out("s"));
  EXPECT_EQ(r.code, 2) << r.err;
  EXPECT_EQ(manifest(dir_ / "s")["result"]["status"], "iteration_limit");
}

TEST_F(Cli, SweepOverAnotherParameter) {
  ASSERT_NE(run("optimize " + cfg() + " --nominal " + out("n")).code, 1);
  const std::string ctrl = "--control \"" + (dir_ / "n" / "control.csv").string() + "\" ";
  const auto r = run("sweep " + cfg() + " " + ctrl + "--param alpha --lower 0.1 --upper 0.9 --grid 21 " + out("s"));
  ASSERT_EQ(r.code, 0) << r.err;
  std::istringstream csv(slurp(dir_ / "s" / "sweep.csv"));
  std::string line;
  std::getline(csv, line);
  EXPECT_EQ(line, "parameter,theta,cost");
  std::vector<double> thetas;
  while (std::getline(csv, line)) {
    ASSERT_EQ(line.rfind("alpha,", 0), 0u) << line;
    thetas.push_back(std::stod(line.substr(6)));
  }
  ASSERT_EQ(thetas.size(), 21u);
  EXPECT_EQ(thetas[0], 0.1);
  EXPECT_NEAR(thetas[1], 0.14, 1e-15);
  EXPECT_EQ(thetas[20], 0.9);

  const auto needs_bounds = run("sweep " + cfg() + " " + ctrl + "--param alpha " + out("t"));
  EXPECT_EQ(needs_bounds.code, 1);
  const auto bogus = run("sweep " + cfg() + " " + ctrl + "--param bogus " + out("u"));
  EXPECT_EQ(bogus.code, 1);
  EXPECT_NE(bogus.err.find("alpha_h"), std::string::npos) << bogus.err;
}

TEST_F(Cli, SweepPairUsesNominalAndRobustLabels) {
  ASSERT_NE(run("optimize " + cfg() + " --nominal " + out("n")).code, 1);
  ASSERT_NE(run("optimize " + cfg() + " " + out("r")).code, 1);
  const auto r = run("sweep " + cfg() + " --control \"" + (dir_ / "n" / "control.csv").string() +
                     "\" --control \"" + (dir_ / "r" / "control.csv").string() + "\" " + out("s"));
  ASSERT_EQ(r.code, 0) << r.err;
  const std::string csv = slurp(dir_ / "s" / "sweep.csv");
  EXPECT_EQ(csv.rfind("parameter,theta,cost_nominal,cost_robust\n", 0), 0u);
  const auto m = manifest(dir_ / "s");
  EXPECT_EQ(m["result"]["grid"], 5);
  EXPECT_EQ(m["result"]["curves"].size(), 2u);
  EXPECT_EQ(m["result"]["curves"][1]["label"], "robust");
}

TEST_F(Cli, HamiltonianNodeLists) {
  const auto one = run("hamiltonian " + cfg() + " --nodes-list 1 " + out("h"));
  ASSERT_EQ(one.code, 0) << one.err;
  const std::string csv = slurp(dir_ / "h" / "convergence.csv");
  EXPECT_EQ(csv.rfind("M,max_abs_H,max_deviation_H,objective,iterations,status\n1,", 0), 0u) << csv;
  EXPECT_EQ(slurp(dir_ / "h" / "hamiltonian_M1.csv").rfind("t,H_value\n", 0), 0u);
  EXPECT_EQ(run("hamiltonian " + cfg() + " --nodes-list \"\" " + out("e")).code, 1);
  EXPECT_EQ(run("hamiltonian " + cfg() + " --nodes-list 2,x " + out("e")).code, 1);
}

TEST_F(Cli, SimulateWritesTrajectory) {
  const auto r = run("simulate " + cfg() + " --stride 50 " + out("sim"));
  ASSERT_EQ(r.code, 0) << r.err;
  const auto m = manifest(dir_ / "sim");
  EXPECT_EQ(m["result"]["node_costs"].size(), 3u);
  for (const auto& f : m["outputs"]) EXPECT_TRUE(fs::exists(dir_ / "sim" / f.get<std::string>()));
}

TEST_F(Cli, PrintConfigRoundTrips) {
  const auto a = run("optimize " + cfg() + " --print-config");
  ASSERT_EQ(a.code, 0) << a.err;
  std::ofstream(dir_ / "resolved.json") << a.out;
  const auto b = run("optimize \"" + (dir_ / "resolved.json").string() + "\" --print-config");
  ASSERT_EQ(b.code, 0) << b.err;
  EXPECT_EQ(a.out, b.out);
  EXPECT_FALSE(fs::exists(dir_ / "out"));
}

TEST_F(Cli, UsageErrorsExitWithOne) {
  EXPECT_EQ(run("").code, 1);
  EXPECT_EQ(run("frobnicate " + cfg()).code, 1);
  EXPECT_EQ(run("optimize /nonexistent.json").code, 1);
  EXPECT_EQ(run("--help").code, 0);
}
