#include "softcoord/rsac.hpp"

#include <cmath>
#include <numbers>

namespace softcoord {

using nn::Matrix;
using nn::RowVector;
using nn::Tape;
using nn::Var;

void Hyperparams::validate() const {
  if (!(gamma > 0.0 && gamma < 1.0)) throw std::invalid_argument("gamma must lie in (0, 1)");
  if (!(alpha > 0.0)) throw std::invalid_argument("alpha must be positive");
  if (!(beta > 0.0 && beta < 1.0)) throw std::invalid_argument("beta must lie in (0, 1)");
  if (!(learning_rate > 0.0)) throw std::invalid_argument("learning rate must be positive");
  if (batch_size == 0) throw std::invalid_argument("batch size must be positive");
  if (buffer_capacity < batch_size) throw std::invalid_argument("buffer capacity below batch size");
  if (horizon == 0) throw std::invalid_argument("horizon must be positive");
  if (gru_hidden <= 0) throw std::invalid_argument("GRU hidden size must be positive");
  for (auto h : hidden_layers) {
    if (h <= 0) throw std::invalid_argument("hidden layer sizes must be positive");
  }
}

FeatureEncoder::FeatureEncoder(const NetworkModel& model, const LdcSettings& ldc)
    : buses_(static_cast<Eigen::Index>(model.buses.size())),
      sites_(static_cast<Eigen::Index>(model.site_count())),
      kw_per_pu_(model.kw_per_pu()),
      p_max_kw_(model.p_max_kw()),
      q_max_kvar_(model.q_max_kvar()),
      q_max_pu_(model.q_max_kvar() / model.kw_per_pu()),
      tap_max_(std::max(std::abs(ldc.tap_max), std::abs(ldc.tap_min))),
      delay_s_(ldc.delay_s) {
  if ((q_max_kvar_.array() <= 0.0).any()) throw std::invalid_argument("every PV site needs a positive Var bound");
  if ((p_max_kw_.array() <= 0.0).any()) throw std::invalid_argument("every PV site needs a positive rating");
}

RowVector FeatureEncoder::encode_state(const MarkovState& s) const {
  if (s.p_load_kw.size() != buses_ || s.q_load_kvar.size() != buses_ || s.v_pu.size() != buses_ ||
      s.p_pv_kw.size() != sites_) {
    throw std::invalid_argument("state does not match the encoder's network");
  }
  RowVector x(state_size());
  Eigen::Index at = 0;
  x.segment(at, buses_) = s.p_load_kw.transpose() / kw_per_pu_, at += buses_;
  x.segment(at, buses_) = s.q_load_kvar.transpose() / kw_per_pu_, at += buses_;
  x.segment(at, sites_) = s.p_pv_kw.cwiseQuotient(p_max_kw_).transpose(), at += sites_;
  x.segment(at, buses_) = (s.v_pu.transpose().array() - 1.0) / 0.05, at += buses_;
  x[at++] = tap_max_ > 0 ? s.tap / tap_max_ : 0.0;
  x[at++] = delay_s_ > 0 ? s.timer_s / delay_s_ : 0.0;
  return x;
}

RowVector FeatureEncoder::encode_action(const Eigen::VectorXd& q_kvar) const {
  if (q_kvar.size() != sites_) throw std::invalid_argument("action does not match the encoder's network");
  return q_kvar.cwiseQuotient(q_max_kvar_).transpose();
}

Eigen::VectorXd FeatureEncoder::decode_action(const RowVector& unit) const {
  if (unit.size() != sites_) throw std::invalid_argument("action does not match the encoder's network");
  return unit.transpose().cwiseProduct(q_max_kvar_).cwiseMax(-q_max_kvar_).cwiseMin(q_max_kvar_);
}

AgentParams AgentParams::create(Eigen::Index state_size, Eigen::Index action_size, const Hyperparams& hp, Rng& rng) {
  hp.validate();
  const Eigen::Index context = state_size + action_size + hp.gru_hidden;
  AgentParams p;
  p.actor.gru = nn::GruParams(state_size + action_size, hp.gru_hidden);
  p.actor.head = nn::MlpParams(hp.gru_hidden, hp.hidden_layers, 2 * action_size);
  p.critic = nn::MlpParams(context + action_size, hp.hidden_layers, 1);
  p.value = nn::MlpParams(context, hp.hidden_layers, 1);
  p.actor.gru.init(rng);
  p.actor.head.init(rng);
  p.critic.init(rng);
  p.value.init(rng);
  p.target = p.value;
  return p;
}

nn::Checkpoint to_checkpoint(const AgentParams& params) {
  nn::Checkpoint ck;
  ck.store("actor", params.actor);
  ck.store("critic", params.critic);
  ck.store("value", params.value);
  ck.store("target", params.target);
  return ck;
}

namespace {

nn::MlpParams mlp_from(const nn::Checkpoint& ck, const std::string& prefix) {
  nn::MlpParams p;
  for (std::size_t i = 0; ck.contains(prefix + ".w" + std::to_string(i)); ++i) {
    p.weights.push_back(ck.get(prefix + ".w" + std::to_string(i)));
    p.biases.push_back(ck.get(prefix + ".b" + std::to_string(i)));
  }
  if (p.weights.empty()) throw nn::CheckpointError("checkpoint has no network '" + prefix + "'");
  for (std::size_t i = 0; i < p.weights.size(); ++i) {
    const bool chained = i == 0 || p.weights[i].rows() == p.weights[i - 1].cols();
    if (!chained || p.biases[i].rows() != 1 || p.biases[i].cols() != p.weights[i].cols()) {
      throw nn::CheckpointError("inconsistent layer shapes in '" + prefix + "'");
    }
  }
  return p;
}

}  // namespace

AgentParams from_checkpoint(const nn::Checkpoint& ck) {
  AgentParams p;
  const Matrix& wz = ck.get("actor.gru.wz");
  p.actor.gru = nn::GruParams(wz.rows() - wz.cols(), wz.cols());
  ck.load("actor.gru", p.actor.gru);
  p.actor.head = mlp_from(ck, "actor.head");
  p.critic = mlp_from(ck, "critic");
  p.value = mlp_from(ck, "value");
  p.target = mlp_from(ck, "target");
  const Eigen::Index n = p.action_size();
  const Eigen::Index context = p.state_size() + n + p.hidden_size();
  if (p.actor.head.input_size() != p.hidden_size() || p.critic.input_size() != context + n ||
      p.value.input_size() != context || p.target.input_size() != context) {
    throw nn::CheckpointError("checkpoint networks do not fit together");
  }
  return p;
}

PolicyOutput policy_forward(const nn::Bound& gru, const nn::Bound& head, Var state, Var prev_action,
                            Var prev_hidden, Var eps, const RowVector& log_q_max) {
  Tape& tape = state.tape();
  PolicyOutput out;
  out.hidden = nn::gru_cell(gru, nn::concat_cols({state, prev_action}), prev_hidden);
  const auto g = nn::gaussian_head(head, out.hidden);
  if (eps.rows() != g.mu.rows() || eps.cols() != g.mu.cols() || log_q_max.size() != g.mu.cols()) {
    throw nn::ShapeError("noise or bounds do not match the policy output");
  }
  const Var u = g.mu + eps * g.sigma;
  out.mean = nn::tanh(g.mu);
  out.unit = nn::tanh(u);
  // (u - mu) / sigma == eps, so the Gaussian quadratic term is a constant.
  const Matrix fixed = (-0.5 * eps.value().array().square()).rowwise() -
                       (0.5 * std::log(2.0 * std::numbers::pi) + log_q_max.array());
  const Var per_dim = tape.constant(fixed) - g.log_std - nn::log_one_minus_tanh_sq(u);
  out.log_prob = nn::row_sum(per_dim);
  return out;
}

ActionSample sample_action(const ActorParams& actor, const RowVector& state, const RowVector& prev_action,
                           const RowVector& prev_hidden, const RowVector& eps, const Eigen::VectorXd& q_max) {
  if ((q_max.array() <= 0.0).any()) throw std::invalid_argument("Var bounds must be positive");
  Tape tape(false);
  const auto gru = nn::bind(tape, actor.gru, false);
  const auto head = nn::bind(tape, actor.head, false);
  const auto out = policy_forward(gru, head, tape.constant(state), tape.constant(prev_action),
                                  tape.constant(prev_hidden), tape.constant(eps),
                                  q_max.array().log().matrix().transpose());
  ActionSample s;
  s.unit = out.unit.value();
  s.mean_unit = out.mean.value();
  s.action = s.unit.transpose().cwiseProduct(q_max);
  s.log_prob = out.log_prob.scalar();
  s.hidden = out.hidden.value();
  return s;
}

Batch make_batch(const std::vector<Transition>& transitions, const FeatureEncoder& encoder) {
  const auto b = static_cast<Eigen::Index>(transitions.size());
  if (b == 0) throw std::invalid_argument("empty batch");
  const Eigen::Index ns = encoder.state_size();
  const Eigen::Index na = encoder.action_size();
  const Eigen::Index nh = transitions.front().hidden.size();
  Batch batch{Matrix(b, ns), Matrix(b, na), Matrix(b, nh), Matrix(b, na),
              Matrix(b, 1),  Matrix(b, ns), Matrix(b, nh)};
  for (Eigen::Index i = 0; i < b; ++i) {
    const auto& tr = transitions[static_cast<std::size_t>(i)];
    if (tr.hidden.size() != nh || tr.prev_hidden.size() != nh) throw std::invalid_argument("hidden sizes differ");
    batch.state.row(i) = encoder.encode_state(tr.state);
    batch.prev_action.row(i) = encoder.encode_action(tr.prev_action);
    batch.prev_hidden.row(i) = tr.prev_hidden.transpose();
    batch.action.row(i) = encoder.encode_action(tr.action);
    batch.reward(i, 0) = tr.reward;
    batch.next_state.row(i) = encoder.encode_state(tr.next_state);
    batch.hidden.row(i) = tr.hidden.transpose();
  }
  return batch;
}

namespace {

template <typename Params>
LossResult finish(Tape& tape, Var loss, const nn::Bound& bound, bool with_gradients) {
  LossResult r;
  r.value = loss.scalar();
  if (with_gradients) {
    tape.backward(loss);
    r.grads = nn::gradients(tape, bound);
  }
  return r;
}

// H^_t = (S_t, A_{t-1}, H_{t-1})
Var context(Tape& tape, const Batch& b) {
  return tape.constant((Matrix(b.size(), b.state.cols() + b.prev_action.cols() + b.prev_hidden.cols())
                        << b.state, b.prev_action, b.prev_hidden).finished());
}

RowVector log_bounds(const Eigen::VectorXd& q_max_pu) {
  if ((q_max_pu.array() <= 0.0).any()) throw std::invalid_argument("Var bounds must be positive");
  return q_max_pu.array().log().matrix().transpose();
}

}  // namespace

LossResult critic_loss(const Batch& batch, const nn::MlpParams& critic, const nn::MlpParams& target, double gamma,
                       bool with_gradients) {
  Tape tape(with_gradients);
  const auto q_net = nn::bind(tape, critic, true);
  const auto v_bar = nn::bind(tape, target, false);
  const Var next = tape.constant(
      (Matrix(batch.size(), batch.next_state.cols() + batch.action.cols() + batch.hidden.cols())
       << batch.next_state, batch.action, batch.hidden).finished());
  const Matrix y = batch.reward + gamma * nn::mlp(v_bar, next).value();
  const Var q = nn::mlp(q_net, nn::concat_cols({context(tape, batch), tape.constant(batch.action)}));
  const Var loss = nn::mean(nn::square(q - tape.constant(y)));
  return finish<nn::MlpParams>(tape, loss, q_net, with_gradients);
}

LossResult value_loss(const Batch& batch, const nn::MlpParams& value, const nn::MlpParams& critic,
                      const ActorParams& actor, double alpha, const Matrix& eps, const Eigen::VectorXd& q_max_pu,
                      bool with_gradients) {
  Tape tape(with_gradients);
  const auto v_net = nn::bind(tape, value, true);
  const auto q_net = nn::bind(tape, critic, false);
  const auto gru = nn::bind(tape, actor.gru, false);
  const auto head = nn::bind(tape, actor.head, false);
  const Var ctx = context(tape, batch);
  const auto pi = policy_forward(gru, head, tape.constant(batch.state), tape.constant(batch.prev_action),
                                 tape.constant(batch.prev_hidden), tape.constant(eps), log_bounds(q_max_pu));
  const Var q = nn::mlp(q_net, nn::concat_cols({ctx, pi.unit}));
  const Matrix y = q.value() - alpha * pi.log_prob.value();
  const Var v = nn::mlp(v_net, ctx);
  const Var loss = nn::mean(nn::square(v - tape.constant(y)));
  return finish<nn::MlpParams>(tape, loss, v_net, with_gradients);
}

LossResult actor_loss(const Batch& batch, const ActorParams& actor, const nn::MlpParams& critic, double alpha,
                      const Matrix& eps, const Eigen::VectorXd& q_max_pu, bool with_gradients) {
  Tape tape(with_gradients);
  const auto gru = nn::bind(tape, actor.gru, true);
  const auto head = nn::bind(tape, actor.head, true);
  const auto q_net = nn::bind(tape, critic, false);
  const auto pi = policy_forward(gru, head, tape.constant(batch.state), tape.constant(batch.prev_action),
                                 tape.constant(batch.prev_hidden), tape.constant(eps), log_bounds(q_max_pu));
  const Var q = nn::mlp(q_net, nn::concat_cols({context(tape, batch), pi.unit}));
  const Var loss = nn::mean(pi.log_prob - nn::scale(q, 1.0 / alpha));
  nn::Bound both = gru;
  both.vars.insert(both.vars.end(), head.vars.begin(), head.vars.end());
  return finish<ActorParams>(tape, loss, both, with_gradients);
}

void soft_update(nn::MlpParams& target, const nn::MlpParams& value, double beta, TargetConvention convention) {
  if (!(beta >= 0.0 && beta <= 1.0)) throw std::invalid_argument("beta must lie in [0, 1]");
  const double keep = convention == TargetConvention::literal ? beta : 1.0 - beta;
  auto dst = nn::parameter_list(target);
  std::vector<const Matrix*> src;
  value.visit([&](const std::string&, const Matrix& m) { src.push_back(&m); });
  if (dst.size() != src.size()) throw nn::ShapeError("target and value networks differ in layout");
  for (std::size_t i = 0; i < dst.size(); ++i) {
    if (dst[i]->rows() != src[i]->rows() || dst[i]->cols() != src[i]->cols()) {
      throw nn::ShapeError("target and value networks differ in shape");
    }
    *dst[i] = keep * *dst[i] + (1.0 - keep) * *src[i];
  }
}

LossReport train_step(const ReplayBuffer& buffer, Agent& agent, const Hyperparams& hp, const FeatureEncoder& encoder,
                      Rng& rng) {
  if (buffer.size() < hp.batch_size) {
    throw WarmupError("replay buffer holds " + std::to_string(buffer.size()) + " transitions, batch needs " +
                      std::to_string(hp.batch_size));
  }
  const Batch batch = make_batch(buffer.sample(hp.batch_size, rng), encoder);
  std::normal_distribution<double> normal;
  Matrix eps(batch.size(), encoder.action_size());
  for (Eigen::Index i = 0; i < eps.rows(); ++i) {
    for (Eigen::Index j = 0; j < eps.cols(); ++j) eps(i, j) = normal(rng);
  }

  auto& p = agent.params;
  const auto jq = critic_loss(batch, p.critic, p.target, hp.gamma);
  const auto jv = value_loss(batch, p.value, p.critic, p.actor, hp.alpha, eps, encoder.q_max_pu());
  const auto jpi = actor_loss(batch, p.actor, p.critic, hp.alpha, eps, encoder.q_max_pu());

  nn::adam_update(nn::parameter_list(p.critic), jq.grads, agent.critic_opt, hp.learning_rate);
  nn::adam_update(nn::parameter_list(p.value), jv.grads, agent.value_opt, hp.learning_rate);
  nn::adam_update(nn::parameter_list(p.actor), jpi.grads, agent.actor_opt, hp.learning_rate);
  soft_update(p.target, p.value, hp.beta, hp.target_convention);
  return {jq.value, jv.value, jpi.value};
}

}  // namespace softcoord
