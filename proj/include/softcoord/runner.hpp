#pragma once

#include "softcoord/baselines.hpp"
#include "softcoord/env.hpp"

#include <filesystem>
#include <optional>
#include <vector>

namespace softcoord {

struct EpisodeSummary {
  double loss_kwh = 0.0;
  int tap_ops = 0;
  int violation_steps = 0;
  double max_v = 0.0;
  double min_v = 0.0;
  double total_reward = 0.0;
  std::size_t steps = 0;
};

struct EpisodeWindow {
  std::size_t start = 0;
  std::optional<std::size_t> horizon;     // default: rest of the day
  std::optional<int> initial_tap;         // default: settled tap at start
};

/// Plays one episode with `controller`, appending per-step rows to `log`
/// when given.
EpisodeSummary run_episode(Environment& env, Controller& controller, std::size_t episode,
                           const EpisodeWindow& window = {}, std::vector<EpisodeLogRow>* log = nullptr);

/// kWh from a per-step loss series in system per-unit.
double loss_kwh(double loss_pu_sum, double base_mva, double dt_s);

void write_summary_csv(const EpisodeSummary& summary, const std::filesystem::path& path);
void write_episode_log_csv(const std::vector<EpisodeLogRow>& rows, std::size_t sites,
                           const std::filesystem::path& path);

}  // namespace softcoord
