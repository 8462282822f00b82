// Command-line front end: simulate, train, compare, validate.
#include "softcoord/config.hpp"
#include "softcoord/controllers.hpp"
#include "softcoord/csv.hpp"
#include "softcoord/runner.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>

namespace fs = std::filesystem;
using namespace softcoord;

namespace {

struct Flags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<std::string> scenario;
  std::optional<std::string> network;
  std::vector<std::string> controllers;
  std::optional<std::size_t> episodes;
  std::optional<std::size_t> horizon;
  std::vector<std::string> overrides;
};

class UsageError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

RunConfig resolve(const Flags& f) {
  RunConfig c;
  try {
    if (!f.config.empty()) {
      for (const auto& [k, v] : read_config_file(f.config)) c.set(k, v);
    }
    for (const auto& item : f.overrides) {
      const auto eq = item.find('=');
      if (eq == std::string::npos) throw ConfigError("--set expects KEY=VALUE, got '" + item + "'");
      c.set(item.substr(0, eq), item.substr(eq + 1));
    }
    if (f.seed) c.set("seed", std::to_string(*f.seed));
    if (f.out) c.out = *f.out;
    if (f.scenario) c.scenario = *f.scenario;
    if (f.network) c.network = *f.network;
    if (f.episodes) c.hp.episodes = *f.episodes;
    if (f.horizon) c.hp.horizon = *f.horizon;
    if (!f.controllers.empty()) {
      c.controllers.clear();
      for (const auto& s : f.controllers) c.controllers.push_back(ControllerSpec::parse(s));
    }
    c.env.ldc.validate();
    c.env.reward.validate();
    c.hp.validate();
  } catch (const ConfigError& e) {
    throw UsageError(e.what());
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  return c;
}

int cmd_simulate(const RunConfig& c) {
  const auto model = load_network(c.network);
  auto controller = make_controller(c.controllers.front(), c.pcc_v_ref);
  Environment env(model, load_day(c, model), c.env);
  std::vector<EpisodeLogRow> rows;
  const auto summary = run_episode(env, *controller, 0, {}, &rows);
  fs::create_directories(c.out);
  write_episode_log_csv(rows, model.site_count(), c.out / "episode_log.csv");
  write_summary_csv(summary, c.out / "summary.csv");
  std::cout << controller->name() << ": loss " << summary.loss_kwh << " kWh, " << summary.tap_ops
            << " tap operations, " << summary.violation_steps << " violation steps\n";
  return 0;
}

int cmd_train(const RunConfig& c) {
  TrainingSetup setup{load_network(c.network), c.env, ScenarioKind::strong, std::nullopt, c.dt_s, c.hp};
  if (const auto kind = parse_scenario_kind(c.scenario); kind && *kind != ScenarioKind::custom) {
    setup.scenario = *kind;
  } else {
    setup.fixed_day = load_day(c, setup.model);
  }
  fs::create_directories(c.out);
  std::ofstream log(c.out / "training_log.csv", std::ios::binary | std::ios::trunc);
  if (!log) throw std::runtime_error("cannot write " + (c.out / "training_log.csv").string());
  const auto sink = [&](std::size_t done, const AgentParams& params) {
    const auto ck = to_checkpoint(params);
    ck.write(c.out / ("checkpoint_" + std::to_string(done) + ".txt"));
    ck.write(c.out / "policy.txt");
  };
  const auto result = run_training(setup, sink, &log);
  if (result.log.empty()) {
    std::cout << "no episodes run\n";
  } else {
    std::cout << "final 50-episode average reward " << result.log.back().avg50_reward << '\n';
  }
  return 0;
}

int cmd_compare(const RunConfig& c) {
  if (c.controllers.size() < 2) throw UsageError("compare needs at least two --controller options");
  const auto model = load_network(c.network);
  const auto day = load_day(c, model);
  std::vector<std::unique_ptr<Controller>> controllers;
  for (const auto& spec : c.controllers) controllers.push_back(make_controller(spec, c.pcc_v_ref));

  std::vector<EpisodeSummary> results;
  for (auto& controller : controllers) {
    Environment env(model, day, c.env);
    results.push_back(run_episode(env, *controller, 0));
  }
  fs::create_directories(c.out);
  std::ofstream out(c.out / "compare.csv", std::ios::binary | std::ios::trunc);
  out << "controller,loss_kwh,tap_ops,violation_steps\n";
  for (std::size_t i = 0; i < results.size(); ++i) {
    out << controllers[i]->name() << ',' << csv::format(results[i].loss_kwh) << ',' << results[i].tap_ops << ','
        << results[i].violation_steps << '\n';
  }
  if (!out) throw std::runtime_error("cannot write compare.csv");
  std::ofstream meta(c.out / "scenario.txt", std::ios::binary | std::ios::trunc);
  meta << "scenario=" << c.scenario << "\nseed=" << c.seed << "\nfingerprint=" << day.fingerprint() << '\n';
  std::cout << "scenario fingerprint " << day.fingerprint() << '\n';
  return 0;
}

int cmd_validate(const RunConfig& c) {
  const auto model = load_network(c.network);
  const auto problems = validate_network(model);
  for (const auto& p : problems) std::cerr << p << '\n';
  if (!problems.empty()) return 2;
  std::cout << c.network << ": " << model.buses.size() << " buses, " << model.lines.size() << " lines, "
            << model.site_count() << " PV sites\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Soft coordination of an OLTC with PV inverters"};
  app.require_subcommand(1);
  Flags flags;
  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--config", flags.config, "key = value settings file")->check(CLI::ExistingFile);
    cmd->add_option("--seed", flags.seed, "root seed");
    cmd->add_option("--out", flags.out, "output directory");
    cmd->add_option("--scenario", flags.scenario, "strong, mild, or a scenario CSV");
    cmd->add_option("--network", flags.network, "builtin:ieee33 or a network CSV");
    cmd->add_option("--controller", flags.controllers, "none, droop, constant-pcc, rsac:CHECKPOINT");
    cmd->add_option("--episodes", flags.episodes, "training episodes");
    cmd->add_option("--horizon", flags.horizon, "training episode length in steps");
    cmd->add_option("--set", flags.overrides, "KEY=VALUE override");
  };
  auto* simulate = app.add_subcommand("simulate", "run one day under a controller");
  auto* train = app.add_subcommand("train", "train the recurrent soft actor-critic policy");
  auto* compare = app.add_subcommand("compare", "run several controllers on the same day");
  auto* validate = app.add_subcommand("validate", "check a network file");
  for (auto* cmd : {simulate, train, compare, validate}) add_common(cmd);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    const RunConfig config = resolve(flags);
    if (*simulate) return cmd_simulate(config);
    if (*train) return cmd_train(config);
    if (*compare) return cmd_compare(config);
    return cmd_validate(config);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
}
