#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

namespace softcoord::nn {

using Matrix = Eigen::MatrixXd;
using RowVector = Eigen::RowVectorXd;

class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class Tape;

/// Handle to a value recorded on a Tape. Rows index the batch.
class Var {
 public:
  Var() = default;
  Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

  Tape& tape() const { return *tape_; }
  std::size_t id() const { return id_; }
  const Matrix& value() const;
  Eigen::Index rows() const { return value().rows(); }
  Eigen::Index cols() const { return value().cols(); }
  /// Value of a 1x1 node.
  double scalar() const;

 private:
  Tape* tape_ = nullptr;
  std::size_t id_ = 0;
};

/// Reverse-mode recorder. With recording off, operations only evaluate
/// forward, through the same arithmetic, so values are bit-identical to a
/// recording run.
class Tape {
 public:
  using Backward = std::function<void(Tape&, const Matrix& upstream)>;

  explicit Tape(bool recording = true) : recording_(recording) {}
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(Matrix value);
  /// Leaf whose gradient is retained after backward().
  Var variable(Matrix value);

  /// Records a node; `backward` receives d(output)/d(node).
  Var record(Matrix value, const char* op, std::initializer_list<Var> inputs, Backward backward);

  const Matrix& value(Var v) const { return nodes_[v.id()].value; }
  bool needs_grad(Var v) const { return nodes_[v.id()].needs_grad; }
  /// Gradient of the last backward() output with respect to `v`; zeros when
  /// `v` does not influence it.
  Matrix grad(Var v) const;
  void accumulate(Var v, const Matrix& contribution);

  /// Seeds d(output)/d(output) = 1 for a 1x1 node and sweeps backwards.
  void backward(Var output);

  bool recording() const { return recording_; }
  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Matrix value;
    Matrix grad;
    bool needs_grad = false;
    bool has_grad = false;
    Backward backward;
  };
  std::vector<Node> nodes_;
  bool recording_;
};

// Elementwise and linear-algebra primitives. Binary elementwise operations
// accept equal shapes or a 1xN right operand broadcast over rows.
Var matmul(Var a, Var b);
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var scale(Var a, double s);
Var add_scalar(Var a, double s);
Var neg(Var a);
Var sigmoid(Var a);
Var tanh(Var a);
Var relu(Var a);
Var exp(Var a);
Var log(Var a);
Var square(Var a);
/// Gradient passes only where lo < a < hi.
Var clamp(Var a, double lo, double hi);
/// log(1 - tanh(a)^2), evaluated stably for large |a|.
Var log_one_minus_tanh_sq(Var a);
/// Sum of all elements, 1x1.
Var sum(Var a);
/// Mean of all elements, 1x1.
Var mean(Var a);
/// Per-row sum, Nx1.
Var row_sum(Var a);
Var concat_cols(std::initializer_list<Var> parts);
Var slice_cols(Var a, Eigen::Index start, Eigen::Index count);

inline Var operator+(Var a, Var b) { return add(a, b); }
inline Var operator-(Var a, Var b) { return sub(a, b); }
inline Var operator*(Var a, Var b) { return mul(a, b); }
inline Var operator-(Var a) { return neg(a); }
inline Var operator*(double s, Var a) { return scale(a, s); }
inline Var operator+(Var a, double s) { return add_scalar(a, s); }

}  // namespace softcoord::nn
