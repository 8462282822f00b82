#include "softcoord/runner.hpp"

#include "softcoord/csv.hpp"

#include <fstream>
#include <limits>

namespace softcoord {

double loss_kwh(double loss_pu_sum, double base_mva, double dt_s) {
  return loss_pu_sum * base_mva * 1000.0 * dt_s / 3600.0;
}

EpisodeSummary run_episode(Environment& env, Controller& controller, std::size_t episode,
                           const EpisodeWindow& window, std::vector<EpisodeLogRow>* log) {
  const int tap = window.initial_tap.value_or(env.settled_tap(window.start));
  MarkovState state = env.reset(tap, window.start, window.horizon);
  controller.begin_episode(env);

  EpisodeSummary summary;
  summary.max_v = -std::numeric_limits<double>::infinity();
  summary.min_v = std::numeric_limits<double>::infinity();
  double loss_sum = 0.0;
  for (std::size_t t = env.start_step(); t < env.end_step(); ++t) {
    const Action action = controller.act(env, state, t);
    const StepOutcome out = env.step(action, t);
    loss_sum += out.loss_pu;
    summary.tap_ops += out.tap_delta != 0 ? 1 : 0;
    summary.violation_steps += out.violation ? 1 : 0;
    summary.max_v = std::max(summary.max_v, out.next.v_pu.maxCoeff());
    summary.min_v = std::min(summary.min_v, out.next.v_pu.minCoeff());
    summary.total_reward += out.reward;
    ++summary.steps;
    if (log) log->push_back(make_log_row(episode, t, env.scenario().dt_s, out, action));
    state = out.next;
  }
  summary.loss_kwh = loss_kwh(loss_sum, env.model().base_mva, env.scenario().dt_s);
  return summary;
}

void write_summary_csv(const EpisodeSummary& summary, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "loss_kwh,tap_ops,violation_steps,max_v,min_v\n";
  out << csv::format(summary.loss_kwh) << ',' << summary.tap_ops << ',' << summary.violation_steps << ','
      << csv::format(summary.max_v) << ',' << csv::format(summary.min_v) << '\n';
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

void write_episode_log_csv(const std::vector<EpisodeLogRow>& rows, std::size_t sites,
                           const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  write_episode_log_header(out, sites);
  for (const auto& row : rows) write_episode_log_row(out, row);
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

}  // namespace softcoord
