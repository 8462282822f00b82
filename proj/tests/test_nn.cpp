#include "doctest.h"
#include "softcoord/checkpoint.hpp"
#include "softcoord/layers.hpp"
#include "support/fixtures.hpp"
#include "support/oracles.hpp"

#include <cmath>
#include <filesystem>
#include <random>

using namespace softcoord::nn;

TEST_CASE("square at three has slope six") {
  Tape t;
  const Var w = t.variable(Matrix::Constant(1, 1, 3.0));
  const Var y = sum(square(w));
  t.backward(y);
  CHECK(y.scalar() == 9.0);
  CHECK(t.grad(w)(0, 0) == 6.0);
}

TEST_CASE("constant expression has zero gradient") {
  Tape t;
  const Var w = t.variable(Matrix::Constant(2, 2, 1.5));
  const Var c = t.constant(Matrix::Constant(2, 2, 2.0));
  const Var y = sum(exp(c) + c);
  t.backward(y);
  CHECK(t.grad(w).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("non-finite values name the primitive") {
  Tape t;
  const Var big = t.variable(Matrix::Constant(1, 1, 800.0));
  CHECK_THROWS_WITH_AS(exp(big), doctest::Contains("exp"), NumericError);
  const Var neg = t.variable(Matrix::Constant(1, 1, -1.0));
  CHECK_THROWS_AS(log(neg), NumericError);
  CHECK_THROWS_AS(t.variable(Matrix::Constant(1, 1, std::nan(""))), NumericError);
}

TEST_CASE("shape errors") {
  Tape t;
  const Var a = t.variable(Matrix::Zero(2, 3));
  const Var b = t.variable(Matrix::Zero(2, 2));
  CHECK_THROWS_AS(matmul(a, b), ShapeError);
  CHECK_THROWS_AS(add(a, b), ShapeError);
  CHECK_THROWS_AS(slice_cols(a, 2, 2), ShapeError);
  CHECK_THROWS_AS(t.backward(a), ShapeError);
}

namespace {

// Twenty expressions covering every primitive, each a scalar function of
// three parameter blocks.
Var expression(int kind, Var a, Var b, Var c) {
  switch (kind % 10) {
    case 0: return mean(square(matmul(a, b)));
    case 1: return sum(tanh(matmul(a, b)) * matmul(a, b));
    case 2: return sum(sigmoid(a) + relu(a * a - 0.3 * a));
    case 3: return mean(exp(scale(a, 0.3)) - log(square(a) + 1.0));
    case 4: return sum(clamp(a, -0.5, 0.5) * tanh(a));
    case 5: return sum(log_one_minus_tanh_sq(a) * sigmoid(a));
    case 6: return sum(row_sum(concat_cols({a, tanh(a)})) * row_sum(a));
    case 7: return sum(square(slice_cols(matmul(a, b), 1, 2)));
    case 8: return sum(add(a, c) * sub(a, c) - mul(a, c));
    default: return mean(neg(a) * (a + 2.0) + 2.0 * (a * exp(c - c)));
  }
}

}  // namespace

TEST_CASE("primitive gradients match central differences") {
  std::mt19937_64 rng(21);
  for (int k = 0; k < 20; ++k) {
    Matrix a = fixture::random_matrix(3, 4, rng);
    Matrix b = fixture::random_matrix(4, 3, rng);
    Matrix c = fixture::random_matrix(1, 4, rng);
    auto eval = [&](bool record, std::vector<Matrix>* grads) {
      Tape t(record);
      const Var va = t.variable(a), vb = t.variable(b), vc = t.variable(c);
      const Var y = expression(k, va, vb, vc);
      if (grads) {
        t.backward(y);
        *grads = {t.grad(va), t.grad(vb), t.grad(vc)};
      }
      return y.scalar();
    };
    std::vector<Matrix> g;
    const double recorded = eval(true, &g);
    CHECK(recorded == eval(false, nullptr));  // forward purity, bit-identical
    const double err = oracle::gradient_check({&a, &b, &c}, g, [&] { return eval(false, nullptr); });
    CHECK_MESSAGE(err <= 1e-4, "expression " << k);
  }
}

TEST_CASE("GRU cell conventions") {
  GruParams p(3, 4);
  const RowVector x = RowVector::LinSpaced(3, -1.0, 1.0);
  const RowVector h = RowVector::LinSpaced(4, 0.2, 0.8);
  CHECK(gru_cell_forward(x, h, p) == 0.5 * h);
  CHECK(gru_cell_forward(x, RowVector::Zero(4), p) == RowVector::Zero(4));

  std::mt19937_64 rng(3);
  softcoord::Rng init(4);
  p.init(init);
  const auto ours = gru_cell_forward(x, h, p);
  const auto ref = oracle::gru_scalar({x[0], x[1], x[2]}, {h[0], h[1], h[2], h[3]}, p);
  for (int k = 0; k < 4; ++k) CHECK(std::abs(ours[k] - ref[static_cast<std::size_t>(k)]) <= 1e-12);

  CHECK_THROWS_AS(gru_cell_forward(RowVector::Zero(2), h, p), ShapeError);
}

TEST_CASE("Gaussian head conventions") {
  MlpParams p(5, {6, 6}, 4);
  const RowVector h = RowVector::LinSpaced(5, -1.0, 1.0);
  auto [mu, sigma] = mlp_gaussian_head(h, p);
  CHECK(mu == RowVector::Zero(2));
  CHECK(sigma == RowVector::Ones(2));

  p.biases.back()(0, 2) = 5.0;
  p.biases.back()(0, 3) = -50.0;
  std::tie(mu, sigma) = mlp_gaussian_head(h, p);
  CHECK(sigma[0] == std::exp(2.0));
  CHECK(sigma[1] == std::exp(-20.0));

  softcoord::Rng init(8);
  p.init(init, 1.0);
  std::tie(mu, sigma) = mlp_gaussian_head(h, p);
  const auto out = oracle::mlp_scalar({h[0], h[1], h[2], h[3], h[4]}, p);
  CHECK(std::abs(mu[0] - out[0]) <= 1e-12);
  CHECK(std::abs(mu[1] - out[1]) <= 1e-12);
  CHECK(std::abs(sigma[0] - std::exp(std::clamp(out[2], -20.0, 2.0))) <= 1e-12);
  CHECK(std::abs(sigma[1] - std::exp(std::clamp(out[3], -20.0, 2.0))) <= 1e-12);
  CHECK_THROWS_AS(mlp_gaussian_head(RowVector::Zero(4), p), ShapeError);
}

TEST_CASE("sigma stays inside the clamp") {
  std::mt19937_64 rng(2);
  MlpParams p(3, {4}, 6);
  for (int k = 0; k < 50; ++k) {
    p.visit([&](const std::string&, Matrix& m) { m = fixture::random_matrix(m.rows(), m.cols(), rng, 20.0); });
    const auto [mu, sigma] = mlp_gaussian_head(fixture::random_matrix(1, 3, rng), p);
    CHECK(sigma.minCoeff() >= std::exp(-20.0));
    CHECK(sigma.maxCoeff() <= std::exp(2.0));
  }
}

TEST_CASE("two-step unrolled GRU loss gradient") {
  std::mt19937_64 rng(9);
  GruParams gru(3, 4);
  MlpParams head(4, {5}, 2);
  softcoord::Rng init(10);
  gru.init(init);
  head.init(init, 1.0);
  const Matrix x1 = fixture::random_matrix(2, 3, rng), x2 = fixture::random_matrix(2, 3, rng);
  auto eval = [&](bool record, std::vector<Matrix>* grads) {
    Tape t(record);
    const auto bg = bind(t, gru), bh = bind(t, head);
    Var h = t.constant(Matrix::Zero(2, 4));
    h = gru_cell(bg, t.constant(x1), h);
    h = gru_cell(bg, t.constant(x2), h);
    const Var y = mean(square(mlp(bh, h)));
    if (grads) {
      t.backward(y);
      *grads = gradients(t, bg);
      const auto more = gradients(t, bh);
      grads->insert(grads->end(), more.begin(), more.end());
    }
    return y.scalar();
  };
  std::vector<Matrix> g;
  eval(true, &g);
  auto params = parameter_list(gru);
  const auto hp = parameter_list(head);
  params.insert(params.end(), hp.begin(), hp.end());
  CHECK(oracle::gradient_check(params, g, [&] { return eval(false, nullptr); }) <= 1e-4);
}

TEST_CASE("Adam") {
  Matrix w = Matrix::Constant(2, 2, 1.0);
  AdamState s;
  adam_update({&w}, {Matrix::Zero(2, 2)}, s, 0.1);
  CHECK(w == Matrix::Constant(2, 2, 1.0));
  CHECK(s.step == 1);

  Matrix g(2, 2);
  g << 0.5, -2.0, 1e-3, -1e-3;
  Matrix p = Matrix::Zero(2, 2);
  AdamState first;
  adam_update({&p}, {g}, first, 0.01);
  // m^ = g, v^ = g^2, so each component moves by lr * g / (|g| + eps)
  for (Eigen::Index i = 0; i < 4; ++i) {
    const double gi = g.data()[i];
    CHECK(p.data()[i] == doctest::Approx(-0.01 * gi / (std::abs(gi) + 1e-8)).epsilon(1e-12));
  }

  Matrix q1 = Matrix::Ones(2, 2), q2 = Matrix::Ones(2, 2);
  AdamState s1, s2;
  for (int k = 0; k < 5; ++k) {
    adam_update({&q1}, {g * k}, s1, 0.01);
    adam_update({&q2}, {g * k}, s2, 0.01);
  }
  CHECK(q1 == q2);
  CHECK_THROWS_AS(adam_update({&q1}, {Matrix::Zero(3, 2)}, s1, 0.01), ShapeError);
}

TEST_CASE("checkpoint round trip is bit-exact") {
  std::mt19937_64 rng(12);
  auto agent = fixture::random_agent(5, 2, rng);
  agent.critic.weights[0](0, 0) = 0.1 + 0.2;  // not representable in short decimal
  agent.value.biases[0](0, 1) = -std::numeric_limits<double>::denorm_min();
  const auto path = std::filesystem::temp_directory_path() / "softcoord_ck.txt";
  softcoord::to_checkpoint(agent).write(path);
  const auto back = softcoord::from_checkpoint(Checkpoint::read(path));
  auto same = [](const auto& x, const auto& y) {
    std::vector<Matrix> a, b;
    x.visit([&](const std::string&, const Matrix& m) { a.push_back(m); });
    y.visit([&](const std::string&, const Matrix& m) { b.push_back(m); });
    if (a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i) {
      if (a[i].rows() != b[i].rows() || a[i].cols() != b[i].cols()) return false;
      if (std::memcmp(a[i].data(), b[i].data(), sizeof(double) * static_cast<std::size_t>(a[i].size())) != 0) {
        return false;
      }
    }
    return true;
  };
  CHECK(same(agent.actor, back.actor));
  CHECK(same(agent.critic, back.critic));
  CHECK(same(agent.value, back.value));
  CHECK(same(agent.target, back.target));
  std::filesystem::remove(path);
  CHECK_THROWS_AS(Checkpoint::read(path), CheckpointError);
}
