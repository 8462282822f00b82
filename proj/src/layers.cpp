#include "softcoord/layers.hpp"

#include <cmath>

namespace softcoord::nn {

namespace {

void fill_uniform(Matrix& m, double bound, Rng& rng) {
  std::uniform_real_distribution<double> u(-bound, bound);
  for (Eigen::Index j = 0; j < m.cols(); ++j) {
    for (Eigen::Index i = 0; i < m.rows(); ++i) m(i, j) = u(rng);
  }
}

}  // namespace

GruParams::GruParams(Eigen::Index input, Eigen::Index hidden)
    : wz(Matrix::Zero(input + hidden, hidden)),
      wr(Matrix::Zero(input + hidden, hidden)),
      wh(Matrix::Zero(input + hidden, hidden)),
      bz(Matrix::Zero(1, hidden)),
      br(Matrix::Zero(1, hidden)),
      bh(Matrix::Zero(1, hidden)) {
  if (input <= 0 || hidden <= 0) throw ShapeError("GRU sizes must be positive");
}

void GruParams::init(Rng& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(hidden_size()));
  visit([&](const std::string&, Matrix& m) { fill_uniform(m, bound, rng); });
}

MlpParams::MlpParams(Eigen::Index input, const std::vector<Eigen::Index>& hidden, Eigen::Index output) {
  Eigen::Index in = input;
  for (Eigen::Index h : hidden) {
    if (h <= 0) throw ShapeError("MLP layer sizes must be positive");
    weights.push_back(Matrix::Zero(in, h));
    biases.push_back(Matrix::Zero(1, h));
    in = h;
  }
  if (input <= 0 || output <= 0) throw ShapeError("MLP sizes must be positive");
  weights.push_back(Matrix::Zero(in, output));
  biases.push_back(Matrix::Zero(1, output));
}

void MlpParams::init(Rng& rng, double output_scale) {
  for (std::size_t i = 0; i < weights.size(); ++i) {
    const bool last = i + 1 == weights.size();
    const double bound = last ? output_scale : 1.0 / std::sqrt(static_cast<double>(weights[i].rows()));
    fill_uniform(weights[i], bound, rng);
    fill_uniform(biases[i], bound, rng);
  }
}

std::vector<Matrix> gradients(const Tape& tape, const Bound& bound) {
  std::vector<Matrix> g;
  g.reserve(bound.vars.size());
  for (const Var& v : bound.vars) g.push_back(tape.grad(v));
  return g;
}

Var gru_cell(const Bound& gru, Var x, Var h_prev) {
  if (gru.vars.size() != 6) throw ShapeError("GRU expects six parameter arrays");
  const Var &wz = gru.vars[0], &wr = gru.vars[1], &wh = gru.vars[2];
  const Var &bz = gru.vars[3], &br = gru.vars[4], &bh = gru.vars[5];
  if (x.cols() + h_prev.cols() != wz.rows() || h_prev.cols() != wz.cols() || x.rows() != h_prev.rows()) {
    throw ShapeError("GRU input " + std::to_string(x.cols()) + " / hidden " + std::to_string(h_prev.cols()) +
                     " do not fit a " + std::to_string(wz.rows()) + "x" + std::to_string(wz.cols()) + " cell");
  }
  const Var xh = concat_cols({x, h_prev});
  const Var z = sigmoid(matmul(xh, wz) + bz);
  const Var r = sigmoid(matmul(xh, wr) + br);
  const Var candidate = tanh(matmul(concat_cols({x, r * h_prev}), wh) + bh);
  // (1 - z) h + z h~  ==  h + z (h~ - h)
  return h_prev + z * (candidate - h_prev);
}

Var mlp(const Bound& net, Var x) {
  const std::size_t layers = net.vars.size() / 2;
  if (layers == 0 || net.vars.size() % 2 != 0) throw ShapeError("MLP needs weight/bias pairs");
  Var y = x;
  for (std::size_t i = 0; i < layers; ++i) {
    y = matmul(y, net.vars[2 * i]) + net.vars[2 * i + 1];
    if (i + 1 < layers) y = relu(y);
  }
  return y;
}

GaussianHead gaussian_head(const Bound& net, Var h) {
  const Var out = mlp(net, h);
  if (out.cols() % 2 != 0) throw ShapeError("Gaussian head needs an even output width");
  const Eigen::Index n = out.cols() / 2;
  GaussianHead g;
  g.mu = slice_cols(out, 0, n);
  g.log_std = clamp(slice_cols(out, n, n), kLogStdMin, kLogStdMax);
  g.sigma = exp(g.log_std);
  return g;
}

RowVector gru_cell_forward(const RowVector& x, const RowVector& h_prev, const GruParams& p) {
  Tape tape(false);
  const auto bound = bind(tape, p, false);
  return gru_cell(bound, tape.constant(x), tape.constant(h_prev)).value();
}

std::pair<RowVector, RowVector> mlp_gaussian_head(const RowVector& h, const MlpParams& p) {
  Tape tape(false);
  const auto bound = bind(tape, p, false);
  const auto g = gaussian_head(bound, tape.constant(h));
  return {g.mu.value(), g.sigma.value()};
}

void adam_update(const std::vector<Matrix*>& params, const std::vector<Matrix>& grads, AdamState& state,
                 double learning_rate) {
  if (params.size() != grads.size()) throw ShapeError("Adam: parameter and gradient counts differ");
  if (state.m.empty()) {
    for (const Matrix* p : params) {
      state.m.push_back(Matrix::Zero(p->rows(), p->cols()));
      state.v.push_back(Matrix::Zero(p->rows(), p->cols()));
    }
  }
  if (state.m.size() != params.size()) throw ShapeError("Adam: state does not match the parameter list");
  ++state.step;
  const double c1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
  const double c2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
  for (std::size_t i = 0; i < params.size(); ++i) {
    Matrix& p = *params[i];
    const Matrix& g = grads[i];
    if (g.rows() != p.rows() || g.cols() != p.cols()) throw ShapeError("Adam: gradient shape mismatch");
    state.m[i] = state.beta1 * state.m[i] + (1.0 - state.beta1) * g;
    state.v[i] = state.beta2 * state.v[i] + (1.0 - state.beta2) * g.cwiseAbs2();
    p.array() -= learning_rate * (state.m[i].array() / c1) / ((state.v[i].array() / c2).sqrt() + state.epsilon);
  }
}

}  // namespace softcoord::nn
