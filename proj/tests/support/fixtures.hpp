#pragma once
// Small random networks and batches shared by unit and acceptance tests.

#include "softcoord/rsac.hpp"

#include <random>

namespace fixture {

using softcoord::nn::Matrix;

inline Matrix random_matrix(Eigen::Index r, Eigen::Index c, std::mt19937_64& rng, double scale = 1.0) {
  std::normal_distribution<double> n(0.0, scale);
  Matrix m(r, c);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = n(rng);
  return m;
}

inline softcoord::Hyperparams tiny_hp() {
  softcoord::Hyperparams hp;
  hp.gru_hidden = 4;
  hp.hidden_layers = {6, 5};
  hp.batch_size = 8;
  return hp;
}

/// Agent with every parameter drawn at unit-ish scale, so that no layer sits
/// near zero and gradients are well away from round-off.
inline softcoord::AgentParams random_agent(Eigen::Index ns, Eigen::Index na, std::mt19937_64& rng) {
  softcoord::Rng init(rng());
  auto p = softcoord::AgentParams::create(ns, na, tiny_hp(), init);
  auto perturb = [&](const std::string&, Matrix& m) { m = random_matrix(m.rows(), m.cols(), rng, 0.5); };
  p.actor.visit(perturb);
  p.critic.visit(perturb);
  p.value.visit(perturb);
  p.target.visit(perturb);
  return p;
}

inline softcoord::Batch random_batch(Eigen::Index b, Eigen::Index ns, Eigen::Index na, Eigen::Index nh,
                                     std::mt19937_64& rng) {
  softcoord::Batch batch;
  batch.state = random_matrix(b, ns, rng);
  batch.prev_action = random_matrix(b, na, rng, 0.5).array().tanh().matrix();
  batch.prev_hidden = random_matrix(b, nh, rng, 0.5).array().tanh().matrix();
  batch.action = random_matrix(b, na, rng, 0.5).array().tanh().matrix();
  batch.reward = random_matrix(b, 1, rng);
  batch.next_state = random_matrix(b, ns, rng);
  batch.hidden = random_matrix(b, nh, rng, 0.5).array().tanh().matrix();
  return batch;
}

inline Eigen::VectorXd random_bounds(Eigen::Index na, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.2, 1.5);
  Eigen::VectorXd q(na);
  for (Eigen::Index i = 0; i < na; ++i) q[i] = u(rng);
  return q;
}

}  // namespace fixture

namespace fixture {

/// Makes an MLP output the constant row `out` regardless of its input.
inline void constant_output(softcoord::nn::MlpParams& p, const Eigen::RowVectorXd& out) {
  p.weights.back().setZero();
  p.biases.back() = out;
}

/// Policy whose Gaussian head is fixed at (mu, log_std) for every input.
inline void fix_policy(softcoord::ActorParams& a, const Eigen::RowVectorXd& mu, const Eigen::RowVectorXd& log_std) {
  Eigen::RowVectorXd out(mu.size() + log_std.size());
  out << mu, log_std;
  constant_output(a.head, out);
}

}  // namespace fixture
