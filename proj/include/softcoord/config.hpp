#pragma once

#include "softcoord/controllers.hpp"
#include "softcoord/env.hpp"
#include "softcoord/rsac.hpp"

#include <filesystem>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace softcoord {

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Everything a command needs, resolved from defaults, an optional
/// `key = value` file, then command-line overrides.
struct RunConfig {
  std::string network = "builtin:ieee33";
  std::string scenario = "strong";  // strong | mild | CSV path
  std::uint64_t seed = 1;
  std::vector<ControllerSpec> controllers{ControllerSpec{"none", {}}};
  std::filesystem::path out = "out";
  double dt_s = 60.0;
  double pcc_v_ref = 1.0;
  EnvConfig env;
  Hyperparams hp;

  /// Applies one setting; unknown keys and malformed values throw ConfigError.
  void set(const std::string& key, const std::string& value);
  static std::vector<std::string> keys();
};

/// `key = value` lines; `#` starts a comment. Returns pairs in file order.
std::vector<std::pair<std::string, std::string>> read_config_file(const std::filesystem::path& path);

NetworkModel load_network(const std::string& spec);
/// Builds the day named by `config.scenario`, seeded from `config.seed`.
DayScenario load_day(const RunConfig& config, const NetworkModel& model);

}  // namespace softcoord
