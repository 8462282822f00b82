#pragma once

#include "softcoord/checkpoint.hpp"
#include "softcoord/env.hpp"
#include "softcoord/layers.hpp"

#include <functional>
#include <optional>
#include <ostream>
#include <vector>

namespace softcoord {

/// How the target-smoothing weight beta enters the update.
/// literal:      target <- beta * target + (1 - beta) * value
/// conventional: target <- (1 - beta) * target + beta * value
enum class TargetConvention { literal, conventional };

struct Hyperparams {
  double gamma = 0.95;
  double alpha = 0.2;
  double learning_rate = 3e-3;
  double beta = 1e-2;
  TargetConvention target_convention = TargetConvention::literal;
  std::size_t batch_size = 256;
  std::size_t buffer_capacity = 100000;
  std::size_t episodes = 1500;
  std::size_t horizon = 240;
  std::uint64_t seed = 1;
  Eigen::Index gru_hidden = 64;
  std::vector<Eigen::Index> hidden_layers{256, 256};
  std::size_t updates_per_episode = 40;
  std::size_t checkpoint_every = 50;

  void validate() const;
};

/// Maps raw observations and actions to network inputs.
class FeatureEncoder {
 public:
  FeatureEncoder(const NetworkModel& model, const LdcSettings& ldc);

  Eigen::Index state_size() const { return 3 * buses_ + sites_ + 2; }
  Eigen::Index action_size() const { return sites_; }
  /// [P_load, Q_load] in system per-unit, PV availability over its rating,
  /// (V - 1) / 0.05, tap / tap_max, timer / T_d.
  nn::RowVector encode_state(const MarkovState& s) const;
  /// Var over its bound, in [-1, 1].
  nn::RowVector encode_action(const Eigen::VectorXd& q_kvar) const;
  Eigen::VectorXd decode_action(const nn::RowVector& unit) const;

  const Eigen::VectorXd& q_max_kvar() const { return q_max_kvar_; }
  /// Var bounds in system per-unit; the policy density is expressed in these units.
  const Eigen::VectorXd& q_max_pu() const { return q_max_pu_; }

 private:
  Eigen::Index buses_;
  Eigen::Index sites_;
  double kw_per_pu_;
  Eigen::VectorXd p_max_kw_;
  Eigen::VectorXd q_max_kvar_;
  Eigen::VectorXd q_max_pu_;
  double tap_max_;
  double delay_s_;
};

/// Recurrent actor: a GRU summary of (S_t, A_{t-1}, H_{t-1}) feeding a
/// Gaussian head.
struct ActorParams {
  nn::GruParams gru;
  nn::MlpParams head;

  template <typename F>
  void visit(F&& f) {
    gru.visit([&](const std::string& n, nn::Matrix& m) { f("gru." + n, m); });
    head.visit([&](const std::string& n, nn::Matrix& m) { f("head." + n, m); });
  }
  template <typename F>
  void visit(F&& f) const {
    gru.visit([&](const std::string& n, const nn::Matrix& m) { f("gru." + n, m); });
    head.visit([&](const std::string& n, const nn::Matrix& m) { f("head." + n, m); });
  }
};

struct AgentParams {
  ActorParams actor;
  nn::MlpParams critic;  // Q(H^_t, A_t)
  nn::MlpParams value;   // V(H^_t)
  nn::MlpParams target;  // slow copy of value

  static AgentParams create(Eigen::Index state_size, Eigen::Index action_size, const Hyperparams& hp, Rng& rng);
  Eigen::Index action_size() const { return actor.head.output_size() / 2; }
  Eigen::Index hidden_size() const { return actor.gru.hidden_size(); }
  Eigen::Index state_size() const { return actor.gru.input_size() - action_size(); }
};

struct Agent {
  AgentParams params;
  nn::AdamState actor_opt;
  nn::AdamState critic_opt;
  nn::AdamState value_opt;
};

nn::Checkpoint to_checkpoint(const AgentParams& params);
AgentParams from_checkpoint(const nn::Checkpoint& ck);

/// Differentiable policy evaluation on a tape.
struct PolicyOutput {
  nn::Var hidden;    // H_t
  nn::Var mean;      // tanh(mu), in [-1, 1]
  nn::Var unit;      // tanh(mu + eps * sigma)
  nn::Var log_prob;  // B x 1, density of q_max * unit
};

PolicyOutput policy_forward(const nn::Bound& gru, const nn::Bound& head, nn::Var state, nn::Var prev_action,
                            nn::Var prev_hidden, nn::Var eps, const nn::RowVector& log_q_max);

struct ActionSample {
  Eigen::VectorXd action;  // q_max * tanh(u)
  double log_prob = 0.0;
  nn::RowVector unit;       // tanh(u)
  nn::RowVector mean_unit;  // tanh(mu)
  nn::RowVector hidden;
};

/// One reparameterized draw: u = mu + eps * sigma, A = q_max * tanh(u).
ActionSample sample_action(const ActorParams& actor, const nn::RowVector& state, const nn::RowVector& prev_action,
                           const nn::RowVector& prev_hidden, const nn::RowVector& eps,
                           const Eigen::VectorXd& q_max);

/// Encoded mini-batch; one row per transition.
struct Batch {
  nn::Matrix state, prev_action, prev_hidden, action, reward, next_state, hidden;

  Eigen::Index size() const { return state.rows(); }
};

Batch make_batch(const std::vector<Transition>& transitions, const FeatureEncoder& encoder);

struct LossResult {
  double value = 0.0;
  std::vector<nn::Matrix> grads;  // empty unless requested
};

/// mean (Q(H^_t, A_t) - R_t - gamma * V_target(H^_{t+1}))^2, gradients for the critic.
LossResult critic_loss(const Batch& batch, const nn::MlpParams& critic, const nn::MlpParams& target, double gamma,
                       bool with_gradients = true);

/// mean (V(H^_t) - Q(H^_t, A~) + alpha log pi(A~))^2 with A~ freshly drawn
/// through `eps`; gradients for the value network.
LossResult value_loss(const Batch& batch, const nn::MlpParams& value, const nn::MlpParams& critic,
                      const ActorParams& actor, double alpha, const nn::Matrix& eps,
                      const Eigen::VectorXd& q_max_pu, bool with_gradients = true);

/// mean (log pi(A~) - Q(H^_t, A~) / alpha), gradients for the actor through
/// the reparameterized action.
LossResult actor_loss(const Batch& batch, const ActorParams& actor, const nn::MlpParams& critic, double alpha,
                      const nn::Matrix& eps, const Eigen::VectorXd& q_max_pu, bool with_gradients = true);

void soft_update(nn::MlpParams& target, const nn::MlpParams& value, double beta,
                 TargetConvention convention = TargetConvention::literal);

class WarmupError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct LossReport {
  double jq = 0.0;
  double jv = 0.0;
  double jpi = 0.0;  // excludes the policy-independent log-partition constant
};

/// One mini-batch update of critic, value and actor, then target smoothing.
LossReport train_step(const ReplayBuffer& buffer, Agent& agent, const Hyperparams& hp,
                      const FeatureEncoder& encoder, Rng& rng);

struct TrainingLogRow {
  std::size_t episode = 0;
  double total_reward = 0.0;
  double avg50_reward = 0.0;
  std::optional<LossReport> losses;  // mean over the episode's updates
  std::size_t buffer_size = 0;
  int taps = 0;
  int violation_steps = 0;
};

void write_training_log_header(std::ostream& out);
void write_training_log_row(std::ostream& out, const TrainingLogRow& row);

struct TrainingSetup {
  NetworkModel model;
  EnvConfig env;
  ScenarioKind scenario = ScenarioKind::strong;
  /// Train on this day only; otherwise every episode draws a fresh day of
  /// `scenario` kind from the training stream.
  std::optional<DayScenario> fixed_day;
  double dt_s = 60.0;
  Hyperparams hp;
};

using CheckpointSink = std::function<void(std::size_t episodes_done, const AgentParams& params)>;

struct TrainingResult {
  Agent agent;
  std::vector<TrainingLogRow> log;
};

/// Episodes are `hp.horizon` steps long at a random start within the day.
/// Deterministic given `hp.seed`.
TrainingResult run_training(const TrainingSetup& setup, const CheckpointSink& sink = {},
                            std::ostream* log = nullptr);

}  // namespace softcoord
