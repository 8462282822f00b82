#include "softcoord/nn.hpp"

#include <cmath>
#include <numbers>

namespace softcoord::nn {

const Matrix& Var::value() const { return tape_->value(*this); }

double Var::scalar() const {
  const auto& v = value();
  if (v.rows() != 1 || v.cols() != 1) throw ShapeError("scalar() on a non-1x1 value");
  return v(0, 0);
}

Var Tape::constant(Matrix value) {
  if (!value.allFinite()) throw NumericError("non-finite constant");
  nodes_.push_back({std::move(value), {}, false, false, {}});
  return {this, nodes_.size() - 1};
}

Var Tape::variable(Matrix value) {
  if (!value.allFinite()) throw NumericError("non-finite variable");
  nodes_.push_back({std::move(value), {}, recording_, false, {}});
  return {this, nodes_.size() - 1};
}

Var Tape::record(Matrix value, const char* op, std::initializer_list<Var> inputs, Backward backward) {
  if (!value.allFinite()) throw NumericError(std::string("non-finite value produced by ") + op);
  bool needs = false;
  if (recording_) {
    for (const Var& in : inputs) needs = needs || nodes_[in.id()].needs_grad;
  }
  nodes_.push_back({std::move(value), {}, needs, false, needs ? std::move(backward) : Backward{}});
  return {this, nodes_.size() - 1};
}

Matrix Tape::grad(Var v) const {
  const auto& n = nodes_[v.id()];
  if (!n.has_grad) return Matrix::Zero(n.value.rows(), n.value.cols());
  return n.grad;
}

void Tape::accumulate(Var v, const Matrix& contribution) {
  auto& n = nodes_[v.id()];
  if (!n.needs_grad) return;
  if (!n.has_grad) {
    n.grad = contribution;
    n.has_grad = true;
  } else {
    n.grad += contribution;
  }
}

void Tape::backward(Var output) {
  if (!recording_) throw std::logic_error("backward() on a non-recording tape");
  const auto& out = nodes_[output.id()];
  if (out.value.rows() != 1 || out.value.cols() != 1) throw ShapeError("backward() needs a 1x1 output");
  for (auto& n : nodes_) n.has_grad = false;
  accumulate(output, Matrix::Ones(1, 1));
  for (std::size_t i = output.id() + 1; i-- > 0;) {
    auto& n = nodes_[i];
    if (!n.has_grad || !n.backward) continue;
    if (!n.grad.allFinite()) throw NumericError("non-finite gradient at node " + std::to_string(i));
    const Matrix upstream = n.grad;
    n.backward(*this, upstream);
  }
}

namespace {

enum class Broadcast { none, row };

Broadcast check_binary(const Matrix& a, const Matrix& b, const char* op) {
  if (a.rows() == b.rows() && a.cols() == b.cols()) return Broadcast::none;
  if (b.rows() == 1 && b.cols() == a.cols()) return Broadcast::row;
  throw ShapeError(std::string(op) + ": shapes " + std::to_string(a.rows()) + "x" + std::to_string(a.cols()) +
                   " and " + std::to_string(b.rows()) + "x" + std::to_string(b.cols()) + " do not match");
}

// Reduces a gradient back to the shape of a broadcast operand.
Matrix reduce_to(const Matrix& g, Broadcast mode) {
  if (mode == Broadcast::row) return g.colwise().sum();
  return g;
}

template <typename Forward, typename Derivative>
Var unary(Var a, const char* op, Forward f, Derivative d) {
  Tape& t = a.tape();
  Matrix out = f(a.value());
  return t.record(std::move(out), op, {a}, [a, d](Tape& tape, const Matrix& up) {
    tape.accumulate(a, d(tape, a).cwiseProduct(up));
  });
}

}  // namespace

Var matmul(Var a, Var b) {
  const Matrix& av = a.value();
  const Matrix& bv = b.value();
  if (av.cols() != bv.rows()) {
    throw ShapeError("matmul: inner dimensions " + std::to_string(av.cols()) + " and " + std::to_string(bv.rows()));
  }
  Matrix out = av * bv;
  return a.tape().record(std::move(out), "matmul", {a, b}, [a, b](Tape& t, const Matrix& up) {
    if (t.needs_grad(a)) t.accumulate(a, up * t.value(b).transpose());
    if (t.needs_grad(b)) t.accumulate(b, t.value(a).transpose() * up);
  });
}

Var add(Var a, Var b) {
  const auto mode = check_binary(a.value(), b.value(), "add");
  Matrix out = mode == Broadcast::row ? Matrix(a.value().rowwise() + b.value().row(0)) : Matrix(a.value() + b.value());
  return a.tape().record(std::move(out), "add", {a, b}, [a, b, mode](Tape& t, const Matrix& up) {
    t.accumulate(a, up);
    if (t.needs_grad(b)) t.accumulate(b, reduce_to(up, mode));
  });
}

Var sub(Var a, Var b) {
  const auto mode = check_binary(a.value(), b.value(), "sub");
  Matrix out = mode == Broadcast::row ? Matrix(a.value().rowwise() - b.value().row(0)) : Matrix(a.value() - b.value());
  return a.tape().record(std::move(out), "sub", {a, b}, [a, b, mode](Tape& t, const Matrix& up) {
    t.accumulate(a, up);
    if (t.needs_grad(b)) t.accumulate(b, -reduce_to(up, mode));
  });
}

Var mul(Var a, Var b) {
  const auto mode = check_binary(a.value(), b.value(), "mul");
  Matrix out = mode == Broadcast::row
                   ? Matrix(a.value().array().rowwise() * b.value().row(0).array())
                   : Matrix(a.value().cwiseProduct(b.value()));
  return a.tape().record(std::move(out), "mul", {a, b}, [a, b, mode](Tape& t, const Matrix& up) {
    const Matrix& av = t.value(a);
    const Matrix& bv = t.value(b);
    if (t.needs_grad(a)) {
      t.accumulate(a, mode == Broadcast::row ? Matrix(up.array().rowwise() * bv.row(0).array())
                                             : Matrix(up.cwiseProduct(bv)));
    }
    if (t.needs_grad(b)) t.accumulate(b, reduce_to(up.cwiseProduct(av), mode));
  });
}

Var scale(Var a, double s) {
  Matrix out = s * a.value();
  return a.tape().record(std::move(out), "scale", {a}, [a, s](Tape& t, const Matrix& up) {
    t.accumulate(a, s * up);
  });
}

Var add_scalar(Var a, double s) {
  Matrix out = a.value().array() + s;
  return a.tape().record(std::move(out), "add_scalar", {a}, [a](Tape& t, const Matrix& up) { t.accumulate(a, up); });
}

Var neg(Var a) { return scale(a, -1.0); }

Var sigmoid(Var a) {
  Matrix out = (1.0 + (-a.value().array()).exp()).inverse().matrix();
  const std::size_t self = a.tape().size();
  return a.tape().record(std::move(out), "sigmoid", {a}, [a, self](Tape& t, const Matrix& up) {
    const Matrix& s = t.value(Var(&t, self));
    t.accumulate(a, (s.array() * (1.0 - s.array()) * up.array()).matrix());
  });
}

Var tanh(Var a) {
  Matrix out = a.value().array().tanh().matrix();
  const std::size_t self = a.tape().size();
  return a.tape().record(std::move(out), "tanh", {a}, [a, self](Tape& t, const Matrix& up) {
    const Matrix& y = t.value(Var(&t, self));
    t.accumulate(a, ((1.0 - y.array().square()) * up.array()).matrix());
  });
}

Var relu(Var a) {
  return unary(
      a, "relu", [](const Matrix& x) -> Matrix { return x.cwiseMax(0.0); },
      [](Tape& t, Var in) -> Matrix { return (t.value(in).array() > 0.0).cast<double>().matrix(); });
}

Var exp(Var a) {
  Matrix out = a.value().array().exp().matrix();
  const std::size_t self = a.tape().size();
  return a.tape().record(std::move(out), "exp", {a}, [a, self](Tape& t, const Matrix& up) {
    t.accumulate(a, t.value(Var(&t, self)).cwiseProduct(up));
  });
}

Var log(Var a) {
  if ((a.value().array() <= 0.0).any()) throw NumericError("log of a non-positive value");
  return unary(
      a, "log", [](const Matrix& x) -> Matrix { return x.array().log().matrix(); },
      [](Tape& t, Var in) -> Matrix { return t.value(in).cwiseInverse(); });
}

Var square(Var a) {
  return unary(
      a, "square", [](const Matrix& x) -> Matrix { return x.array().square().matrix(); },
      [](Tape& t, Var in) -> Matrix { return 2.0 * t.value(in); });
}

Var clamp(Var a, double lo, double hi) {
  return unary(
      a, "clamp", [lo, hi](const Matrix& x) -> Matrix { return x.cwiseMax(lo).cwiseMin(hi); },
      [lo, hi](Tape& t, Var in) -> Matrix {
        const auto& x = t.value(in).array();
        return ((x > lo) && (x < hi)).cast<double>().matrix();
      });
}

Var log_one_minus_tanh_sq(Var a) {
  // 1 - tanh(x)^2 = 4 e^{-2|x|} / (1 + e^{-2|x|})^2
  return unary(
      a, "log_one_minus_tanh_sq",
      [](const Matrix& x) -> Matrix {
        const auto ax = x.array().abs();
        return (2.0 * (std::numbers::ln2 - ax - (-2.0 * ax).exp().log1p())).matrix();
      },
      [](Tape& t, Var in) -> Matrix { return (-2.0 * t.value(in).array().tanh()).matrix(); });
}

Var sum(Var a) {
  Matrix out(1, 1);
  out(0, 0) = a.value().sum();
  return a.tape().record(std::move(out), "sum", {a}, [a](Tape& t, const Matrix& up) {
    const Matrix& x = t.value(a);
    t.accumulate(a, Matrix::Constant(x.rows(), x.cols(), up(0, 0)));
  });
}

Var mean(Var a) {
  const auto n = static_cast<double>(a.value().size());
  if (n == 0) throw ShapeError("mean of an empty value");
  Matrix out(1, 1);
  out(0, 0) = a.value().sum() / n;
  return a.tape().record(std::move(out), "mean", {a}, [a, n](Tape& t, const Matrix& up) {
    const Matrix& x = t.value(a);
    t.accumulate(a, Matrix::Constant(x.rows(), x.cols(), up(0, 0) / n));
  });
}

Var row_sum(Var a) {
  Matrix out = a.value().rowwise().sum();
  return a.tape().record(std::move(out), "row_sum", {a}, [a](Tape& t, const Matrix& up) {
    const Matrix& x = t.value(a);
    t.accumulate(a, up.col(0).replicate(1, x.cols()));
  });
}

Var concat_cols(std::initializer_list<Var> parts) {
  if (parts.size() == 0) throw ShapeError("concat_cols of nothing");
  Tape& tape = parts.begin()->tape();
  const Eigen::Index rows = parts.begin()->rows();
  Eigen::Index cols = 0;
  for (const Var& p : parts) {
    if (p.rows() != rows) throw ShapeError("concat_cols: row counts differ");
    cols += p.cols();
  }
  Matrix out(rows, cols);
  Eigen::Index at = 0;
  std::vector<Var> inputs(parts);
  for (const Var& p : parts) {
    out.middleCols(at, p.cols()) = p.value();
    at += p.cols();
  }
  return tape.record(std::move(out), "concat_cols", parts, [inputs](Tape& t, const Matrix& up) {
    Eigen::Index offset = 0;
    for (const Var& p : inputs) {
      const Eigen::Index c = t.value(p).cols();
      if (t.needs_grad(p)) t.accumulate(p, up.middleCols(offset, c));
      offset += c;
    }
  });
}

Var slice_cols(Var a, Eigen::Index start, Eigen::Index count) {
  if (start < 0 || count < 0 || start + count > a.cols()) throw ShapeError("slice_cols out of range");
  Matrix out = a.value().middleCols(start, count);
  return a.tape().record(std::move(out), "slice_cols", {a}, [a, start, count](Tape& t, const Matrix& up) {
    const Matrix& x = t.value(a);
    Matrix g = Matrix::Zero(x.rows(), x.cols());
    g.middleCols(start, count) = up;
    t.accumulate(a, g);
  });
}

}  // namespace softcoord::nn
