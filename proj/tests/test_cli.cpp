#include "doctest.h"
#include "softcoord/config.hpp"

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

namespace fs = std::filesystem;
using namespace softcoord;

namespace {

int run(const std::string& args) {
  const std::string cmd = std::string(SOFTCOORD_CLI) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

fs::path scratch(const std::string& name) {
  const auto p = fs::temp_directory_path() / ("softcoord_cli_" + name);
  fs::remove_all(p);
  return p;
}

std::size_t line_count(const fs::path& p) {
  std::ifstream in(p);
  std::size_t n = 0;
  for (std::string line; std::getline(in, line);) ++n;
  return n;
}

}  // namespace

TEST_CASE("config keys and overrides") {
  RunConfig c;
  c.set("gamma", "0.9");
  c.set("hidden_layers", "32,16");
  c.set("target_tau_convention", "conventional");
  c.set("seed", "7");
  c.set("controllers", "droop,constant-pcc");
  CHECK(c.hp.gamma == 0.9);
  CHECK(c.hp.hidden_layers == std::vector<Eigen::Index>{32, 16});
  CHECK(c.hp.target_convention == TargetConvention::conventional);
  CHECK(c.seed == 7);
  CHECK(c.hp.seed == 7);
  REQUIRE(c.controllers.size() == 2);
  CHECK(c.controllers[1].name == "constant-pcc");
  CHECK_THROWS_AS(c.set("gama", "0.9"), ConfigError);
  CHECK_THROWS_AS(c.set("gamma", "high"), ConfigError);
  CHECK_THROWS_AS(c.set("batch_size", "-3"), ConfigError);
  CHECK_FALSE(RunConfig::keys().empty());

  const auto path = fs::temp_directory_path() / "softcoord_cfg.txt";
  std::ofstream(path) << "# settings\nalpha = 0.5   # temperature\n\nepisodes=3\n";
  const auto pairs = read_config_file(path);
  REQUIRE(pairs.size() == 2);
  CHECK(pairs[0] == std::pair<std::string, std::string>{"alpha", "0.5"});
  CHECK(pairs[1].second == "3");
  std::ofstream(path) << "alpha 0.5\n";
  CHECK_THROWS_AS(read_config_file(path), ConfigError);
  fs::remove(path);
}

TEST_CASE("controller specs") {
  CHECK(ControllerSpec::parse("rsac:/tmp/p.txt").checkpoint == "/tmp/p.txt");
  CHECK(ControllerSpec::parse("droop").to_string() == "droop");
  CHECK_THROWS_AS(ControllerSpec::parse("fuzzy"), std::invalid_argument);
  CHECK_THROWS_AS(ControllerSpec::parse("rsac:"), std::invalid_argument);
}

TEST_CASE("command line") {
  CHECK(run("") == 1);
  CHECK(run("simulate --bogus") == 1);
  CHECK(run("simulate --set nope=1") == 1);
  CHECK(run("validate") == 0);

  const auto sim = scratch("sim");
  CHECK(run("simulate --controller droop --out " + sim.string()) == 0);
  CHECK(line_count(sim / "episode_log.csv") == 1441);
  CHECK(line_count(sim / "summary.csv") == 2);

  const auto missing = scratch("missing");
  CHECK(run("simulate --controller rsac:/nonexistent/policy.txt --out " + missing.string()) != 0);
  CHECK_FALSE(fs::exists(missing));

  const auto train = scratch("train");
  CHECK(run("train --episodes 0 --out " + train.string()) == 0);
  CHECK(line_count(train / "training_log.csv") == 1);
  CHECK(fs::exists(train / "policy.txt"));

  const auto cmp = scratch("cmp");
  CHECK(run("compare --controller none --controller droop --controller rsac:" + (train / "policy.txt").string() +
            " --out " + cmp.string()) == 0);
  CHECK(line_count(cmp / "compare.csv") == 4);
  CHECK(fs::exists(cmp / "scenario.txt"));
  CHECK(run("compare --controller none --out " + cmp.string()) == 1);

  const auto bad = fs::temp_directory_path() / "softcoord_bad_net.csv";
  std::ofstream(bad) << "this is not a network\n";
  CHECK(run("validate --network " + bad.string()) == 2);
  fs::remove(bad);
  for (const auto& p : {sim, train, cmp}) fs::remove_all(p);
}
