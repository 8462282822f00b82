#pragma once

#include "softcoord/nn.hpp"
#include "softcoord/random.hpp"

#include <string>
#include <vector>

namespace softcoord::nn {

/// Single GRU cell. Weights act on row vectors: gate = [x, h] * W + b.
///   z  = sigmoid([x, h] Wz + bz)
///   r  = sigmoid([x, h] Wr + br)
///   h~ = tanh([x, r*h] Wh + bh)
///   h' = (1 - z) * h + z * h~
struct GruParams {
  Matrix wz, wr, wh;  // (input + hidden) x hidden
  Matrix bz, br, bh;  // 1 x hidden

  GruParams() = default;
  GruParams(Eigen::Index input, Eigen::Index hidden);

  Eigen::Index input_size() const { return wz.rows() - hidden_size(); }
  Eigen::Index hidden_size() const { return wz.cols(); }
  void init(Rng& rng);

  template <typename F>
  void visit(F&& f) {
    f("wz", wz), f("wr", wr), f("wh", wh), f("bz", bz), f("br", br), f("bh", bh);
  }
  template <typename F>
  void visit(F&& f) const {
    f("wz", wz), f("wr", wr), f("wh", wh), f("bz", bz), f("br", br), f("bh", bh);
  }
};

/// Dense stack, ReLU between layers and a linear output.
struct MlpParams {
  std::vector<Matrix> weights;  // in x out
  std::vector<Matrix> biases;   // 1 x out

  MlpParams() = default;
  MlpParams(Eigen::Index input, const std::vector<Eigen::Index>& hidden, Eigen::Index output);

  Eigen::Index input_size() const { return weights.front().rows(); }
  Eigen::Index output_size() const { return weights.back().cols(); }
  /// Fan-in uniform init; the output layer starts near zero.
  void init(Rng& rng, double output_scale = 3e-3);

  template <typename F>
  void visit(F&& f) {
    for (std::size_t i = 0; i < weights.size(); ++i) {
      f("w" + std::to_string(i), weights[i]);
      f("b" + std::to_string(i), biases[i]);
    }
  }
  template <typename F>
  void visit(F&& f) const {
    for (std::size_t i = 0; i < weights.size(); ++i) {
      f("w" + std::to_string(i), weights[i]);
      f("b" + std::to_string(i), biases[i]);
    }
  }
};

/// Tape variables for a parameter set, in visit order.
struct Bound {
  std::vector<Var> vars;
};

template <typename Params>
Bound bind(Tape& tape, const Params& p, bool trainable = true) {
  Bound b;
  p.visit([&](const std::string&, const Matrix& m) {
    b.vars.push_back(trainable ? tape.variable(m) : tape.constant(m));
  });
  return b;
}

/// Gradients of the last backward() pass, in visit order.
std::vector<Matrix> gradients(const Tape& tape, const Bound& bound);

template <typename Params>
std::vector<Matrix*> parameter_list(Params& p) {
  std::vector<Matrix*> out;
  p.visit([&](const std::string&, Matrix& m) { out.push_back(&m); });
  return out;
}

Var gru_cell(const Bound& gru, Var x, Var h_prev);
Var mlp(const Bound& net, Var x);

struct GaussianHead {
  Var mu;
  Var log_std;  // clamped
  Var sigma;
};

inline constexpr double kLogStdMin = -20.0;
inline constexpr double kLogStdMax = 2.0;

GaussianHead gaussian_head(const Bound& net, Var h);

/// Plain-value conveniences over a single row.
RowVector gru_cell_forward(const RowVector& x, const RowVector& h_prev, const GruParams& p);
std::pair<RowVector, RowVector> mlp_gaussian_head(const RowVector& h, const MlpParams& p);

struct AdamState {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  long step = 0;
  std::vector<Matrix> m;
  std::vector<Matrix> v;
};

/// One bias-corrected Adam descent step.
void adam_update(const std::vector<Matrix*>& params, const std::vector<Matrix>& grads, AdamState& state,
                 double learning_rate);

}  // namespace softcoord::nn
