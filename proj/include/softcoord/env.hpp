#pragma once

#include "softcoord/grid.hpp"
#include "softcoord/oltc.hpp"
#include "softcoord/random.hpp"
#include "softcoord/scenario.hpp"

#include <Eigen/Dense>

#include <filesystem>
#include <mutex>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <vector>

namespace softcoord {

/// Full observation: exogenous loads and PV, bus voltages, and tap-changer state.
struct MarkovState {
  Eigen::VectorXd p_load_kw;
  Eigen::VectorXd q_load_kvar;
  Eigen::VectorXd p_pv_kw;
  Eigen::VectorXd v_pu;
  int tap = 0;
  double timer_s = 0.0;

  friend bool operator==(const MarkovState& a, const MarkovState& b) {
    return a.p_load_kw == b.p_load_kw && a.q_load_kvar == b.q_load_kvar && a.p_pv_kw == b.p_pv_kw &&
           a.v_pu == b.v_pu && a.tap == b.tap && a.timer_s == b.timer_s;
  }
};

/// Inverter reactive output per PV site, kvar (positive = injection).
struct Action {
  Eigen::VectorXd q_kvar;

  static Action zero(std::size_t sites) { return {Eigen::VectorXd::Zero(static_cast<Eigen::Index>(sites))}; }
};

struct RewardConfig {
  double penalty = -100.0;   // M
  double incentive = 100.0;  // lambda
  double v_upper = 1.05;
  double v_lower = 0.95;

  void validate() const;
};

/// Voltage-deviation penalty when any bus is out of limits, otherwise the
/// loss reduction relative to the no-action flow.
double compute_reward(const Eigen::Ref<const Eigen::VectorXd>& v_pu, double loss_pu, double loss0_pu,
                      const RewardConfig& cfg);

bool has_violation(const Eigen::Ref<const Eigen::VectorXd>& v_pu, const RewardConfig& cfg);

class ActionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class EpisodeError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct EnvConfig {
  LdcSettings ldc;
  RewardConfig reward;
  SolverOptions solver;
};

struct StepOutcome {
  MarkovState next;
  double reward = 0.0;
  bool done = false;
  double loss_pu = 0.0;   // after any tap change
  double loss0_pu = 0.0;  // zero-Var flow at the tap held before the step
  int tap_delta = 0;
  bool violation = false;
  PowerFlowResult flow;
};

/// The OLTC-equipped feeder driven by a day scenario. One step applies the
/// inverter Var set-points, solves the flow, lets the tap changer observe
/// it, re-solves after a tap change, and scores the result.
class Environment {
 public:
  Environment(NetworkModel model, DayScenario scenario, EnvConfig config = {});

  /// Starts an episode at `start` lasting `horizon` steps (default: to the
  /// end of the day). Returns S_start from a zero-Var flow.
  MarkovState reset(int initial_tap, std::size_t start = 0, std::optional<std::size_t> horizon = {});

  StepOutcome step(const Action& action, std::size_t t);

  /// Line loss at step t with every inverter at zero Var and the tap held
  /// when step t began.
  double counterfactual_loss(std::size_t t) const;

  /// Flow for a candidate action at step t with the current tap, without
  /// advancing anything.
  PowerFlowResult trial_flow(const Action& action, std::size_t t) const;

  /// Tap at which the zero-Var compensated voltage sits inside the dead band
  /// at step t, searching from the middle of the range.
  int settled_tap(std::size_t t) const;

  void validate_action(const Action& action) const;

  const NetworkModel& model() const { return model_; }
  const DayScenario& scenario() const { return scenario_; }
  const EnvConfig& config() const { return config_; }
  const OltcState& oltc_state() const { return oltc_; }
  const MarkovState& state() const { return state_; }
  std::size_t start_step() const { return start_; }
  std::size_t end_step() const { return end_; }
  std::size_t next_step() const { return next_; }
  const Eigen::VectorXd& q_max_kvar() const { return q_max_; }

 private:
  Injections injections(const Action& action, std::size_t t, int tap) const;
  PowerFlowResult solve(const Injections& inj, std::size_t t) const;
  MarkovState observe(std::size_t t, const PowerFlowResult& flow) const;

  NetworkModel model_;
  DayScenario scenario_;
  EnvConfig config_;
  Eigen::VectorXd q_max_;
  std::vector<std::size_t> site_bus_index_;
  OltcState oltc_;
  MarkovState state_;
  std::vector<int> tap_at_step_;
  std::size_t start_ = 0;
  std::size_t end_ = 0;
  std::size_t next_ = 0;
};

/// One replay entry: (S_t, A_{t-1}, H_{t-1}) is the recurrent context, A_t
/// the action taken, H_t the hidden state after consuming S_t.
struct Transition {
  MarkovState state;
  Eigen::VectorXd prev_action;
  Eigen::VectorXd prev_hidden;
  Eigen::VectorXd action;
  double reward = 0.0;
  MarkovState next_state;
  Eigen::VectorXd hidden;
  std::size_t episode = 0;
  std::size_t step = 0;
  bool done = false;
};

/// Bounded FIFO of transitions; pushes and samples are serialized.
class ReplayBuffer {
 public:
  explicit ReplayBuffer(std::size_t capacity = 100000);

  void push(Transition t);
  /// Uniform draw with replacement.
  std::vector<Transition> sample(std::size_t n, Rng& rng) const;
  std::size_t size() const;
  std::size_t capacity() const { return capacity_; }
  /// i-th oldest entry.
  Transition at(std::size_t i) const;

 private:
  std::size_t capacity_;
  std::vector<Transition> ring_;
  std::size_t head_ = 0;  // index of the oldest entry once full
  mutable std::mutex mutex_;
};

struct EpisodeLogRow {
  std::size_t episode = 0;
  std::size_t step = 0;
  double t_sec = 0.0;
  double reward = 0.0;
  int tap = 0;
  double timer_s = 0.0;
  double vmin = 0.0;
  double vmax = 0.0;
  double loss_pu = 0.0;
  Eigen::VectorXd q_pv;
};

EpisodeLogRow make_log_row(std::size_t episode, std::size_t step, double dt_s, const StepOutcome& outcome,
                           const Action& action);
void write_episode_log_header(std::ostream& out, std::size_t sites);
void write_episode_log_row(std::ostream& out, const EpisodeLogRow& row);

}  // namespace softcoord
