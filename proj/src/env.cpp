#include "softcoord/env.hpp"

#include "softcoord/csv.hpp"

#include <algorithm>
#include <cmath>

namespace softcoord {

void RewardConfig::validate() const {
  if (!(penalty < 0.0)) throw std::invalid_argument("reward penalty M must be negative");
  if (!(incentive > 0.0)) throw std::invalid_argument("reward incentive must be positive");
  if (!(v_lower < v_upper)) throw std::invalid_argument("voltage limits are inverted");
}

bool has_violation(const Eigen::Ref<const Eigen::VectorXd>& v_pu, const RewardConfig& cfg) {
  return (v_pu.array() > cfg.v_upper).any() || (v_pu.array() < cfg.v_lower).any();
}

double compute_reward(const Eigen::Ref<const Eigen::VectorXd>& v_pu, double loss_pu, double loss0_pu,
                      const RewardConfig& cfg) {
  if (has_violation(v_pu, cfg)) {
    const double deviation = (v_pu.array() - cfg.v_upper).max(0.0).sum() +
                             (cfg.v_lower - v_pu.array()).max(0.0).sum();
    return cfg.penalty * deviation;
  }
  return cfg.incentive * (loss0_pu - loss_pu);
}

Environment::Environment(NetworkModel model, DayScenario scenario, EnvConfig config)
    : model_(std::move(model)), scenario_(std::move(scenario)), config_(config) {
  if (const auto problems = validate_network(model_); !problems.empty()) {
    throw NetworkError("invalid network: " + problems.front());
  }
  config_.ldc.validate();
  config_.reward.validate();
  if (config_.ldc.tap_min != model_.tap.tap_min || config_.ldc.tap_max != model_.tap.tap_max ||
      config_.ldc.step_ratio != model_.tap.step_ratio) {
    // the relay's idea of the tap range is the transformer's
    model_.tap.tap_min = config_.ldc.tap_min;
    model_.tap.tap_max = config_.ldc.tap_max;
    model_.tap.step_ratio = config_.ldc.step_ratio;
  }
  scenario_.validate(model_);
  q_max_ = model_.q_max_kvar();
  for (const auto& site : model_.pv_sites) site_bus_index_.push_back(model_.index_of(site.bus));
  end_ = scenario_.steps();
}

Injections Environment::injections(const Action& action, std::size_t t, int tap) const {
  const auto row = static_cast<Eigen::Index>(t);
  Injections inj{scenario_.load_p_kw.row(row).transpose(), scenario_.load_q_kvar.row(row).transpose(), tap};
  for (std::size_t j = 0; j < site_bus_index_.size(); ++j) {
    const auto b = static_cast<Eigen::Index>(site_bus_index_[j]);
    const auto s = static_cast<Eigen::Index>(j);
    inj.p_kw[b] -= scenario_.pv_avail_kw(row, s);
    inj.q_kvar[b] -= action.q_kvar[s];
  }
  return inj;
}

PowerFlowResult Environment::solve(const Injections& inj, std::size_t t) const {
  auto flow = solve_power_flow(model_, inj, config_.solver);
  if (!flow.converged) {
    throw EpisodeError("power flow did not converge at step " + std::to_string(t) + " (tap " +
                       std::to_string(inj.tap) + ")");
  }
  return flow;
}

MarkovState Environment::observe(std::size_t t, const PowerFlowResult& flow) const {
  const auto row = static_cast<Eigen::Index>(std::min(t, scenario_.steps() - 1));
  MarkovState s;
  s.p_load_kw = scenario_.load_p_kw.row(row).transpose();
  s.q_load_kvar = scenario_.load_q_kvar.row(row).transpose();
  s.p_pv_kw = scenario_.pv_avail_kw.row(row).transpose();
  s.v_pu = flow.voltage_magnitude();
  s.tap = oltc_.tap;
  s.timer_s = oltc_.timer_s;
  return s;
}

MarkovState Environment::reset(int initial_tap, std::size_t start, std::optional<std::size_t> horizon) {
  if (initial_tap < config_.ldc.tap_min || initial_tap > config_.ldc.tap_max) {
    throw std::invalid_argument("initial tap " + std::to_string(initial_tap) + " out of range");
  }
  if (start >= scenario_.steps()) throw std::invalid_argument("episode start beyond scenario");
  const std::size_t length = horizon.value_or(scenario_.steps() - start);
  if (length == 0 || start + length > scenario_.steps()) {
    throw std::invalid_argument("episode horizon does not fit in the scenario");
  }
  start_ = start;
  end_ = start + length;
  next_ = start;
  oltc_ = OltcState{initial_tap, 0.0, TimerDirection::none};
  tap_at_step_.clear();
  const auto flow = solve(injections(Action::zero(model_.site_count()), start, initial_tap), start);
  state_ = observe(start, flow);
  return state_;
}

void Environment::validate_action(const Action& action) const {
  if (action.q_kvar.size() != q_max_.size()) {
    throw ActionError("action has " + std::to_string(action.q_kvar.size()) + " entries, expected " +
                      std::to_string(q_max_.size()));
  }
  for (Eigen::Index j = 0; j < q_max_.size(); ++j) {
    if (!std::isfinite(action.q_kvar[j]) || std::abs(action.q_kvar[j]) > q_max_[j]) {
      throw ActionError("Var set-point " + csv::format(action.q_kvar[j]) + " kvar at site bus " +
                        std::to_string(model_.pv_sites[static_cast<std::size_t>(j)].bus) +
                        " exceeds +/-" + csv::format(q_max_[j]));
    }
  }
}

double Environment::counterfactual_loss(std::size_t t) const {
  if (t < start_ || t >= end_) throw std::out_of_range("step outside the episode");
  int tap = oltc_.tap;
  if (t < next_) {
    tap = tap_at_step_[t - start_];
  } else if (t > next_) {
    throw std::out_of_range("counterfactual requested for a future step");
  }
  return solve(injections(Action::zero(model_.site_count()), t, tap), t).loss_pu;
}

PowerFlowResult Environment::trial_flow(const Action& action, std::size_t t) const {
  if (t >= scenario_.steps()) throw std::out_of_range("step outside the scenario");
  return solve(injections(action, t, oltc_.tap), t);
}

int Environment::settled_tap(std::size_t t) const {
  const auto zero = Action::zero(model_.site_count());
  int tap = std::clamp(0, config_.ldc.tap_min, config_.ldc.tap_max);
  int direction = 0;
  for (int guard = 0; guard <= config_.ldc.tap_max - config_.ldc.tap_min; ++guard) {
    const auto flow = solve(injections(zero, t, tap), t);
    const double v_est = estimate_voltage(
        flow.v0, to_compensator_current(flow.i0, model_.base_mva, config_.ldc), config_.ldc);
    int want = 0;
    if (v_est > config_.ldc.band_high()) want = -1;
    if (v_est < config_.ldc.band_low()) want = +1;
    // stop at the band, a limit, or when the search turns around
    if (want == 0 || (direction != 0 && want != direction)) break;
    if (tap + want < config_.ldc.tap_min || tap + want > config_.ldc.tap_max) break;
    direction = want;
    tap += want;
  }
  return tap;
}

StepOutcome Environment::step(const Action& action, std::size_t t) {
  if (t != next_ || t >= end_) {
    throw std::invalid_argument("step " + std::to_string(t) + " out of sequence (expected " +
                                std::to_string(next_) + ")");
  }
  validate_action(action);

  StepOutcome out;
  const int tap_before = oltc_.tap;
  tap_at_step_.push_back(tap_before);
  out.flow = solve(injections(action, t, tap_before), t);
  out.loss0_pu = solve(injections(Action::zero(model_.site_count()), t, tap_before), t).loss_pu;

  const double v_est = estimate_voltage(
      out.flow.v0, to_compensator_current(out.flow.i0, model_.base_mva, config_.ldc), config_.ldc);
  const auto relay = oltc_step(oltc_, v_est, scenario_.dt_s, config_.ldc);
  oltc_ = relay.state;
  out.tap_delta = relay.tap_delta;
  if (relay.tap_delta != 0) out.flow = solve(injections(action, t, oltc_.tap), t);

  out.loss_pu = out.flow.loss_pu;
  next_ = t + 1;
  out.done = next_ == end_;
  out.next = observe(t + 1, out.flow);
  // the measured voltages belong to step t; exogenous values advance to t+1
  out.violation = has_violation(out.next.v_pu, config_.reward);
  out.reward = compute_reward(out.next.v_pu, out.loss_pu, out.loss0_pu, config_.reward);
  if (!std::isfinite(out.reward)) throw EpisodeError("non-finite reward at step " + std::to_string(t));
  state_ = out.next;
  return out;
}

EpisodeLogRow make_log_row(std::size_t episode, std::size_t step, double dt_s, const StepOutcome& outcome,
                           const Action& action) {
  EpisodeLogRow row;
  row.episode = episode;
  row.step = step;
  row.t_sec = static_cast<double>(step) * dt_s;
  row.reward = outcome.reward;
  row.tap = outcome.next.tap;
  row.timer_s = outcome.next.timer_s;
  row.vmin = outcome.next.v_pu.minCoeff();
  row.vmax = outcome.next.v_pu.maxCoeff();
  row.loss_pu = outcome.loss_pu;
  row.q_pv = action.q_kvar;
  return row;
}

void write_episode_log_header(std::ostream& out, std::size_t sites) {
  out << "episode,step,t_sec,reward,tap,timer_sec,vmin,vmax,loss_pu";
  for (std::size_t j = 1; j <= sites; ++j) out << ",q_pv_" << j;
  out << '\n';
}

void write_episode_log_row(std::ostream& out, const EpisodeLogRow& row) {
  out << row.episode << ',' << row.step << ',' << csv::format(row.t_sec) << ',' << csv::format(row.reward)
      << ',' << row.tap << ',' << csv::format(row.timer_s) << ',' << csv::format(row.vmin) << ','
      << csv::format(row.vmax) << ',' << csv::format(row.loss_pu);
  for (Eigen::Index j = 0; j < row.q_pv.size(); ++j) out << ',' << csv::format(row.q_pv[j]);
  out << '\n';
}

}  // namespace softcoord
