#include "softcoord/config.hpp"

#include "softcoord/csv.hpp"

#include <fstream>
#include <functional>

namespace softcoord {

namespace {

double to_double(const std::string& key, const std::string& value) {
  double v = 0.0;
  if (!csv::parse_double(value, v)) throw ConfigError(key + ": expected a number, got '" + value + "'");
  return v;
}

long long to_int(const std::string& key, const std::string& value) {
  long long v = 0;
  if (!csv::parse_int(value, v)) throw ConfigError(key + ": expected an integer, got '" + value + "'");
  return v;
}

std::size_t to_count(const std::string& key, const std::string& value) {
  const long long v = to_int(key, value);
  if (v < 0) throw ConfigError(key + ": must not be negative");
  return static_cast<std::size_t>(v);
}

using Setter = std::function<void(RunConfig&, const std::string& key, const std::string& value)>;

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = {
      {"network", [](RunConfig& c, auto&, auto& v) { c.network = v; }},
      {"scenario", [](RunConfig& c, auto&, auto& v) { c.scenario = v; }},
      {"seed", [](RunConfig& c, auto& k, auto& v) { c.seed = to_count(k, v); }},
      {"out", [](RunConfig& c, auto&, auto& v) { c.out = v; }},
      {"controller", [](RunConfig& c, auto&, auto& v) { c.controllers = {ControllerSpec::parse(v)}; }},
      {"controllers",
       [](RunConfig& c, auto&, auto& v) {
         c.controllers.clear();
         for (const auto& item : csv::split(v)) {
           if (!item.empty()) c.controllers.push_back(ControllerSpec::parse(item));
         }
       }},
      {"dt_s", [](RunConfig& c, auto& k, auto& v) { c.dt_s = to_double(k, v); }},
      {"pcc_v_ref", [](RunConfig& c, auto& k, auto& v) { c.pcc_v_ref = to_double(k, v); }},
      // reward
      {"penalty", [](RunConfig& c, auto& k, auto& v) { c.env.reward.penalty = to_double(k, v); }},
      {"incentive", [](RunConfig& c, auto& k, auto& v) { c.env.reward.incentive = to_double(k, v); }},
      {"v_upper", [](RunConfig& c, auto& k, auto& v) { c.env.reward.v_upper = to_double(k, v); }},
      {"v_lower", [](RunConfig& c, auto& k, auto& v) { c.env.reward.v_lower = to_double(k, v); }},
      // tap changer
      {"ldc_target", [](RunConfig& c, auto& k, auto& v) { c.env.ldc.target_pu = to_double(k, v); }},
      {"ldc_r", [](RunConfig& c, auto& k, auto& v) { c.env.ldc.r_pu = to_double(k, v); }},
      {"ldc_x", [](RunConfig& c, auto& k, auto& v) { c.env.ldc.x_pu = to_double(k, v); }},
      {"deadband", [](RunConfig& c, auto& k, auto& v) { c.env.ldc.deadband_pu = to_double(k, v); }},
      {"delay_s", [](RunConfig& c, auto& k, auto& v) { c.env.ldc.delay_s = to_double(k, v); }},
      {"tap_min", [](RunConfig& c, auto& k, auto& v) { c.env.ldc.tap_min = static_cast<int>(to_int(k, v)); }},
      {"tap_max", [](RunConfig& c, auto& k, auto& v) { c.env.ldc.tap_max = static_cast<int>(to_int(k, v)); }},
      {"tap_step", [](RunConfig& c, auto& k, auto& v) { c.env.ldc.step_ratio = to_double(k, v); }},
      {"ldc_current_base_mva",
       [](RunConfig& c, auto& k, auto& v) { c.env.ldc.current_base_mva = to_double(k, v); }},
      // learning
      {"gamma", [](RunConfig& c, auto& k, auto& v) { c.hp.gamma = to_double(k, v); }},
      {"alpha", [](RunConfig& c, auto& k, auto& v) { c.hp.alpha = to_double(k, v); }},
      {"learning_rate", [](RunConfig& c, auto& k, auto& v) { c.hp.learning_rate = to_double(k, v); }},
      {"beta", [](RunConfig& c, auto& k, auto& v) { c.hp.beta = to_double(k, v); }},
      {"target_tau_convention",
       [](RunConfig& c, auto& k, auto& v) {
         if (v == "literal") {
           c.hp.target_convention = TargetConvention::literal;
         } else if (v == "conventional") {
           c.hp.target_convention = TargetConvention::conventional;
         } else {
           throw ConfigError(k + ": expected literal or conventional");
         }
       }},
      {"batch_size", [](RunConfig& c, auto& k, auto& v) { c.hp.batch_size = to_count(k, v); }},
      {"buffer_capacity", [](RunConfig& c, auto& k, auto& v) { c.hp.buffer_capacity = to_count(k, v); }},
      {"episodes", [](RunConfig& c, auto& k, auto& v) { c.hp.episodes = to_count(k, v); }},
      {"horizon", [](RunConfig& c, auto& k, auto& v) { c.hp.horizon = to_count(k, v); }},
      {"gru_hidden",
       [](RunConfig& c, auto& k, auto& v) { c.hp.gru_hidden = static_cast<Eigen::Index>(to_count(k, v)); }},
      {"hidden_layers",
       [](RunConfig& c, auto& k, auto& v) {
         c.hp.hidden_layers.clear();
         for (const auto& item : csv::split(v)) {
           c.hp.hidden_layers.push_back(static_cast<Eigen::Index>(to_count(k, item)));
         }
       }},
      {"updates_per_episode", [](RunConfig& c, auto& k, auto& v) { c.hp.updates_per_episode = to_count(k, v); }},
      {"checkpoint_every", [](RunConfig& c, auto& k, auto& v) { c.hp.checkpoint_every = to_count(k, v); }},
  };
  return table;
}

}  // namespace

void RunConfig::set(const std::string& key, const std::string& value) {
  const auto it = setters().find(key);
  if (it == setters().end()) throw ConfigError("unknown setting '" + key + "'");
  it->second(*this, key, value);
  if (key == "seed") hp.seed = seed;
}

std::vector<std::string> RunConfig::keys() {
  std::vector<std::string> out;
  for (const auto& [k, _] : setters()) out.push_back(k);
  return out;
}

std::vector<std::pair<std::string, std::string>> read_config_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  std::vector<std::pair<std::string, std::string>> out;
  std::string line;
  for (int number = 1; std::getline(in, line); ++number) {
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(path.string() + ":" + std::to_string(number) + ": expected key = value");
    }
    auto trim = [](std::string s) {
      const auto a = s.find_first_not_of(" \t\r");
      const auto b = s.find_last_not_of(" \t\r");
      return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
    };
    out.emplace_back(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    if (out.back().first.empty()) throw ConfigError(path.string() + ":" + std::to_string(number) + ": empty key");
  }
  return out;
}

NetworkModel load_network(const std::string& spec) {
  if (spec == "builtin:ieee33") return build_ieee33();
  if (!std::filesystem::exists(spec)) throw ConfigError("network file not found: " + spec);
  return read_network_csv(spec);
}

DayScenario load_day(const RunConfig& config, const NetworkModel& model) {
  if (const auto kind = parse_scenario_kind(config.scenario); kind && *kind != ScenarioKind::custom) {
    return make_day_scenario(model, *kind, config.dt_s, config.seed);
  }
  if (!std::filesystem::exists(config.scenario)) throw ConfigError("scenario file not found: " + config.scenario);
  return load_scenario_csv(config.scenario, model);
}

}  // namespace softcoord
