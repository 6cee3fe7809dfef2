#pragma once

#include "attnorm/geometry.hpp"

#include <Eigen/Core>

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

/// Minimal reverse-mode automatic differentiation over dense 2-D double tensors.
///
/// A Tape records every operation in construction order, which is already a
/// topological order, so backward() is a single reverse sweep. A tape belongs to
/// one thread; independent tapes share nothing.
namespace attnorm::ad {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

class Tape;

/// Handle to a node on a tape. Cheap to copy; valid while its tape lives.
class Var {
public:
  Var() = default;

  const Matrix& value() const;
  Eigen::Index rows() const { return value().rows(); }
  Eigen::Index cols() const { return value().cols(); }
  /// Value of a 1x1 tensor.
  double scalar() const;

  Tape* tape() const { return tape_; }
  std::size_t id() const { return id_; }

private:
  friend class Tape;
  Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

  Tape* tape_ = nullptr;
  std::size_t id_ = 0;
};

/// dL/d(leaf) for every leaf on the tape, each with the shape of its leaf.
class Gradients {
public:
  const Matrix& operator[](const Var& leaf) const;
  std::size_t size() const { return grads_.size(); }

private:
  friend class Tape;
  std::vector<Matrix> grads_;    // indexed by node id; empty for non-leaves
  std::vector<bool> is_leaf_;
  const Tape* tape_ = nullptr;
};

class Tape {
public:
  using BackwardFn = std::function<void(Tape&, const Matrix& out_grad)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  /// Differentiable input (parameter or data).
  Var leaf(Matrix value);
  /// Non-differentiable input.
  Var constant(Matrix value);

  /// Records an operation. `backward` receives the output gradient and must
  /// push gradients to its parents through accumulate(). Skipped entirely when
  /// none of `parents` requires a gradient.
  Var record(Matrix value, std::initializer_list<Var> parents, BackwardFn backward);
  Var record(Matrix value, std::span<const Var> parents, BackwardFn backward);

  const Matrix& value(std::size_t id) const { return nodes_[id].value; }
  bool requires_grad(const Var& v) const { return nodes_[v.id()].requires_grad; }
  void accumulate(const Var& v, const Matrix& grad);

  /// Reverse sweep from a 1x1 root. `seed` scales the root gradient.
  Gradients backward(const Var& root, double seed = 1.0);

  std::size_t size() const { return nodes_.size(); }

private:
  struct Node {
    Matrix value;
    BackwardFn backward;
    bool requires_grad = false;
    bool is_leaf = false;
  };

  void check_owned(const Var& v) const;

  std::vector<Node> nodes_;
  std::vector<Matrix> grads_;
};

// Primitives. Shapes must match exactly except where noted.

/// A (m x n) * B (n x p).
Var matmul(const Var& a, const Var& b);
/// A + B; B may also be a 1 x cols row that is broadcast over A's rows (bias add).
Var add(const Var& a, const Var& b);
/// Elementwise product.
Var mul(const Var& a, const Var& b);
/// A / s for a 1x1 tensor s; differentiable in both A and s.
Var scalar_div(const Var& a, const Var& s);
/// A * c for a fixed constant c.
Var scalar_mul(const Var& a, double c);
Var relu(const Var& a);
Var exp(const Var& a);
/// Row-wise softmax, computed with the row maximum subtracted.
Var softmax_rows(const Var& a);
/// 1 x cols column-wise maximum over rows; the lowest row index wins ties.
Var max_rows(const Var& a);
Var concat_cols(std::span<const Var> parts);
Var transpose(const Var& a);
/// v / ||v|| for a 1 x n row.
Var l2_normalize_row(const Var& v);
/// u x v for 1 x 3 rows.
Var cross3(const Var& u, const Var& v);
/// Frobenius norm as a 1x1 tensor.
Var norm2(const Var& v);
/// Sum of all entries as a 1x1 tensor.
Var sum(const Var& a);

/// Builds a scalar loss from leaves created on the given tape.
using GraphBuilder = std::function<Var(Tape&, std::span<const Var> leaves)>;

/// Worst relative error between reverse-mode gradients and central differences
/// (L(x+eps) - L(x-eps)) / 2eps over every leaf entry. The denominator is
/// max(|analytic|, |numeric|, 1e-8).
double grad_check(const GraphBuilder& build, const std::vector<Matrix>& leaf_values, double eps = 1e-6);

}  // namespace attnorm::ad
