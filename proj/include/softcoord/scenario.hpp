#pragma once

#include "softcoord/grid.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>

namespace softcoord {

enum class ScenarioKind { strong, mild, custom };

const char* to_string(ScenarioKind kind);
std::optional<ScenarioKind> parse_scenario_kind(std::string_view text);

/// Day-long exogenous inputs at a fixed step. Matrices are step-major:
/// row t holds the values at t * dt seconds.
struct DayScenario {
  double dt_s = 60.0;
  Eigen::MatrixXd load_p_kw;     // steps x buses
  Eigen::MatrixXd load_q_kvar;   // steps x buses
  Eigen::MatrixXd pv_avail_kw;   // steps x sites
  ScenarioKind label = ScenarioKind::custom;
  std::uint64_t seed = 0;

  std::size_t steps() const { return static_cast<std::size_t>(load_p_kw.rows()); }
  /// Checks shapes and PV limits against the model; throws ScenarioError.
  void validate(const NetworkModel& model) const;
  /// Order-sensitive digest of every value, for pairing checks.
  std::uint64_t fingerprint() const;
};

class ScenarioError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct CloudOptions {
  bool per_site = false;
};

/// Clear-sky envelope times a two-state cloud multiplier. steps x sites, kW.
Eigen::MatrixXd generate_pv_profile(ScenarioKind mode, std::span<const PvSite> sites, double dt_s,
                                    std::uint64_t seed, const CloudOptions& options = {});

/// Diurnal scaling in [0.6, 1.0] at a given hour of day.
double diurnal_load_factor(double hour);

struct LoadProfile {
  Eigen::MatrixXd p_kw;    // steps x buses
  Eigen::MatrixXd q_kvar;  // steps x buses
};

LoadProfile generate_load_profile(const NetworkModel& model, double dt_s, std::uint64_t seed);

/// Strong or mild day for a model, all streams derived from `seed`.
DayScenario make_day_scenario(const NetworkModel& model, ScenarioKind mode, double dt_s,
                              std::uint64_t seed, const CloudOptions& options = {});

DayScenario load_scenario_csv(const std::filesystem::path& path, const NetworkModel& model);
void write_scenario_csv(const DayScenario& scenario, const NetworkModel& model,
                        const std::filesystem::path& path);

}  // namespace softcoord
