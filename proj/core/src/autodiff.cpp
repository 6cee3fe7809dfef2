#include "attnorm/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace attnorm::ad {
namespace {

void require(bool ok, const char* what) {
  if (!ok) throw Error(what);
}

std::string shape(const Matrix& m) { return std::to_string(m.rows()) + "x" + std::to_string(m.cols()); }

void require_same_shape(const Var& a, const Var& b, const char* op) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw Error(std::string(op) + ": shape mismatch " + shape(a.value()) + " vs " + shape(b.value()));
  }
}

void require_same_tape(const Var& a, const Var& b) {
  require(a.tape() != nullptr && a.tape() == b.tape(), "operands live on different tapes");
}

}  // namespace

const Matrix& Var::value() const {
  require(tape_ != nullptr, "use of an unbound Var");
  return tape_->value(id_);
}

double Var::scalar() const {
  const auto& v = value();
  require(v.rows() == 1 && v.cols() == 1, "scalar() on a non-scalar tensor");
  return v(0, 0);
}

const Matrix& Gradients::operator[](const Var& leaf) const {
  require(leaf.tape() == tape_ && leaf.id() < grads_.size() && is_leaf_[leaf.id()], "not a leaf of this tape");
  return grads_[leaf.id()];
}

void Tape::check_owned(const Var& v) const {
  require(v.tape() == this && v.id() < nodes_.size(), "Var does not belong to this tape");
}

Var Tape::leaf(Matrix value) {
  require(value.allFinite(), "non-finite leaf value");
  nodes_.push_back(Node{std::move(value), {}, true, true});
  return Var(this, nodes_.size() - 1);
}

Var Tape::constant(Matrix value) {
  nodes_.push_back(Node{std::move(value), {}, false, true});
  return Var(this, nodes_.size() - 1);
}

Var Tape::record(Matrix value, std::initializer_list<Var> parents, BackwardFn backward) {
  return record(std::move(value), std::span<const Var>(parents.begin(), parents.size()), std::move(backward));
}

Var Tape::record(Matrix value, std::span<const Var> parents, BackwardFn backward) {
  bool needs = false;
  for (const auto& p : parents) {
    check_owned(p);
    needs = needs || nodes_[p.id()].requires_grad;
  }
  Node node{std::move(value), {}, needs, false};
  if (needs) node.backward = std::move(backward);
  nodes_.push_back(std::move(node));
  return Var(this, nodes_.size() - 1);
}

void Tape::accumulate(const Var& v, const Matrix& grad) {
  const auto id = v.id();
  if (!nodes_[id].requires_grad) return;
  Matrix& g = grads_[id];
  if (g.size() == 0) {
    g = grad;
  } else {
    g += grad;
  }
}

Gradients Tape::backward(const Var& root, double seed) {
  check_owned(root);
  if (root.rows() != 1 || root.cols() != 1) throw Error("backward requires scalar root");

  grads_.assign(nodes_.size(), Matrix());
  grads_[root.id()] = Matrix::Constant(1, 1, seed);
  for (std::size_t id = root.id() + 1; id-- > 0;) {
    Node& node = nodes_[id];
    if (node.is_leaf || !node.requires_grad || grads_[id].size() == 0) continue;
    // Parents always have smaller ids, so this node's gradient is final here.
    const Matrix g = std::move(grads_[id]);
    node.backward(*this, g);
  }

  Gradients out;
  out.tape_ = this;
  out.grads_.resize(nodes_.size());
  out.is_leaf_.assign(nodes_.size(), false);
  for (std::size_t id = 0; id < nodes_.size(); ++id) {
    if (!nodes_[id].is_leaf) continue;
    out.is_leaf_[id] = true;
    if (grads_[id].size() == 0) {
      out.grads_[id] = Matrix::Zero(nodes_[id].value.rows(), nodes_[id].value.cols());
    } else {
      out.grads_[id] = std::move(grads_[id]);
    }
  }
  grads_.clear();
  return out;
}

Var matmul(const Var& a, const Var& b) {
  require_same_tape(a, b);
  if (a.cols() != b.rows()) {
    throw Error("matmul: inner dimensions differ " + shape(a.value()) + " * " + shape(b.value()));
  }
  Matrix out = a.value() * b.value();
  return a.tape()->record(std::move(out), {a, b}, [a, b](Tape& t, const Matrix& g) {
    if (t.requires_grad(a)) t.accumulate(a, g * b.value().transpose());
    if (t.requires_grad(b)) t.accumulate(b, a.value().transpose() * g);
  });
}

Var add(const Var& a, const Var& b) {
  require_same_tape(a, b);
  if (a.rows() == b.rows() && a.cols() == b.cols()) {
    Matrix out = a.value() + b.value();
    return a.tape()->record(std::move(out), {a, b}, [a, b](Tape& t, const Matrix& g) {
      t.accumulate(a, g);
      t.accumulate(b, g);
    });
  }
  if (b.rows() == 1 && b.cols() == a.cols()) {
    Matrix out = a.value().rowwise() + b.value().row(0);
    return a.tape()->record(std::move(out), {a, b}, [a, b](Tape& t, const Matrix& g) {
      t.accumulate(a, g);
      if (t.requires_grad(b)) t.accumulate(b, g.colwise().sum());
    });
  }
  throw Error("add: shape mismatch " + shape(a.value()) + " + " + shape(b.value()));
}

Var mul(const Var& a, const Var& b) {
  require_same_tape(a, b);
  require_same_shape(a, b, "mul");
  Matrix out = a.value().cwiseProduct(b.value());
  return a.tape()->record(std::move(out), {a, b}, [a, b](Tape& t, const Matrix& g) {
    if (t.requires_grad(a)) t.accumulate(a, g.cwiseProduct(b.value()));
    if (t.requires_grad(b)) t.accumulate(b, g.cwiseProduct(a.value()));
  });
}

Var scalar_div(const Var& a, const Var& s) {
  require_same_tape(a, s);
  require(s.rows() == 1 && s.cols() == 1, "scalar_div: divisor must be 1x1");
  const double sv = s.scalar();
  require(sv != 0.0, "scalar_div: division by zero");
  Matrix out = a.value() / sv;
  return a.tape()->record(std::move(out), {a, s}, [a, s, sv](Tape& t, const Matrix& g) {
    if (t.requires_grad(a)) t.accumulate(a, g / sv);
    if (t.requires_grad(s)) {
      // d(A/s)/ds = -A / s^2, summed against the incoming gradient.
      const double ds = -g.cwiseProduct(a.value()).sum() / (sv * sv);
      t.accumulate(s, Matrix::Constant(1, 1, ds));
    }
  });
}

Var scalar_mul(const Var& a, double c) {
  Matrix out = a.value() * c;
  return a.tape()->record(std::move(out), {a}, [a, c](Tape& t, const Matrix& g) { t.accumulate(a, g * c); });
}

Var relu(const Var& a) {
  Matrix out = a.value().cwiseMax(0.0);
  return a.tape()->record(std::move(out), {a}, [a](Tape& t, const Matrix& g) {
    t.accumulate(a, (g.array() * (a.value().array() > 0.0).cast<double>()).matrix());
  });
}

Var exp(const Var& a) {
  Matrix out = a.value().array().exp().matrix();
  Tape* tape = a.tape();
  const auto self_id = tape->size();
  return tape->record(std::move(out), {a}, [a, self_id](Tape& t, const Matrix& g) {
    t.accumulate(a, g.cwiseProduct(t.value(self_id)));
  });
}

Var softmax_rows(const Var& a) {
  const Matrix& x = a.value();
  Matrix y(x.rows(), x.cols());
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    const double m = x.row(r).maxCoeff();
    y.row(r) = (x.row(r).array() - m).exp().matrix();
    y.row(r) /= y.row(r).sum();
  }
  Tape* tape = a.tape();
  const auto self_id = tape->size();
  return tape->record(std::move(y), {a}, [a, self_id](Tape& t, const Matrix& g) {
    const Matrix& y = t.value(self_id);
    const Eigen::VectorXd dots = g.cwiseProduct(y).rowwise().sum();
    Matrix dx = (g.colwise() - dots).cwiseProduct(y);
    t.accumulate(a, dx);
  });
}

Var max_rows(const Var& a) {
  const Matrix& x = a.value();
  require(x.rows() >= 1, "max_rows: empty input");
  Matrix out(1, x.cols());
  std::vector<Eigen::Index> winner(static_cast<std::size_t>(x.cols()), 0);
  for (Eigen::Index c = 0; c < x.cols(); ++c) {
    Eigen::Index best = 0;
    for (Eigen::Index r = 1; r < x.rows(); ++r) {
      if (x(r, c) > x(best, c)) best = r;
    }
    winner[static_cast<std::size_t>(c)] = best;
    out(0, c) = x(best, c);
  }
  return a.tape()->record(std::move(out), {a}, [a, winner = std::move(winner)](Tape& t, const Matrix& g) {
    Matrix dx = Matrix::Zero(a.rows(), a.cols());
    for (Eigen::Index c = 0; c < dx.cols(); ++c) dx(winner[static_cast<std::size_t>(c)], c) = g(0, c);
    t.accumulate(a, dx);
  });
}

Var concat_cols(std::span<const Var> parts) {
  require(!parts.empty(), "concat_cols: no inputs");
  const auto rows = parts.front().rows();
  Eigen::Index cols = 0;
  for (const auto& p : parts) {
    require_same_tape(parts.front(), p);
    require(p.rows() == rows, "concat_cols: row counts differ");
    cols += p.cols();
  }
  Matrix out(rows, cols);
  Eigen::Index offset = 0;
  for (const auto& p : parts) {
    out.middleCols(offset, p.cols()) = p.value();
    offset += p.cols();
  }
  std::vector<Var> saved(parts.begin(), parts.end());
  return parts.front().tape()->record(std::move(out), parts, [saved](Tape& t, const Matrix& g) {
    Eigen::Index off = 0;
    for (const auto& p : saved) {
      if (t.requires_grad(p)) t.accumulate(p, g.middleCols(off, p.cols()));
      off += p.cols();
    }
  });
}

Var transpose(const Var& a) {
  Matrix out = a.value().transpose();
  return a.tape()->record(std::move(out), {a}, [a](Tape& t, const Matrix& g) { t.accumulate(a, g.transpose()); });
}

Var l2_normalize_row(const Var& v) {
  require(v.rows() == 1, "l2_normalize_row: expects a single row");
  const double n = v.value().norm();
  require(n > 0.0, "l2_normalize_row: zero vector");
  Matrix out = v.value() / n;
  Tape* tape = v.tape();
  const auto self_id = tape->size();
  return tape->record(std::move(out), {v}, [v, n, self_id](Tape& t, const Matrix& g) {
    const Matrix& y = t.value(self_id);
    const double dot = g.cwiseProduct(y).sum();
    t.accumulate(v, (g - dot * y) / n);
  });
}

Var cross3(const Var& u, const Var& v) {
  require_same_tape(u, v);
  require(u.rows() == 1 && u.cols() == 3 && v.rows() == 1 && v.cols() == 3, "cross3: expects 1x3 rows");
  const Eigen::RowVector3d a = u.value().row(0);
  const Eigen::RowVector3d b = v.value().row(0);
  Matrix out = a.cross(b);
  return u.tape()->record(std::move(out), {u, v}, [u, v, a, b](Tape& t, const Matrix& g) {
    const Eigen::RowVector3d gr = g.row(0);
    // g . (a x b) = a . (b x g) = b . (g x a)
    if (t.requires_grad(u)) t.accumulate(u, Matrix(b.cross(gr)));
    if (t.requires_grad(v)) t.accumulate(v, Matrix(gr.cross(a)));
  });
}

Var norm2(const Var& v) {
  const double n = v.value().norm();
  return v.tape()->record(Matrix::Constant(1, 1, n), {v}, [v, n](Tape& t, const Matrix& g) {
    if (n == 0.0) return;  // subgradient 0 at the origin
    t.accumulate(v, v.value() * (g(0, 0) / n));
  });
}

Var sum(const Var& a) {
  return a.tape()->record(Matrix::Constant(1, 1, a.value().sum()), {a}, [a](Tape& t, const Matrix& g) {
    t.accumulate(a, Matrix::Constant(a.rows(), a.cols(), g(0, 0)));
  });
}

double grad_check(const GraphBuilder& build, const std::vector<Matrix>& leaf_values, double eps) {
  if (!(eps >= 1e-8 && eps <= 1e-4)) throw Error("grad_check: eps must lie in [1e-8, 1e-4]");

  auto evaluate = [&](const std::vector<Matrix>& values) {
    Tape tape;
    std::vector<Var> leaves;
    leaves.reserve(values.size());
    for (const auto& v : values) leaves.push_back(tape.leaf(v));
    return build(tape, leaves).scalar();
  };

  Tape tape;
  std::vector<Var> leaves;
  for (const auto& v : leaf_values) leaves.push_back(tape.leaf(v));
  const Var loss = build(tape, leaves);
  const Gradients grads = tape.backward(loss);

  double worst = 0.0;
  std::vector<Matrix> probe = leaf_values;
  for (std::size_t l = 0; l < probe.size(); ++l) {
    const Matrix& analytic = grads[leaves[l]];
    for (Eigen::Index i = 0; i < probe[l].size(); ++i) {
      double& x = probe[l].data()[i];
      const double saved = x;
      x = saved + eps;
      const double up = evaluate(probe);
      x = saved - eps;
      const double down = evaluate(probe);
      x = saved;
      const double numeric = (up - down) / (2.0 * eps);
      const double a = analytic.data()[i];
      const double denom = std::max({std::abs(a), std::abs(numeric), 1e-8});
      worst = std::max(worst, std::abs(a - numeric) / denom);
    }
  }
  return worst;
}

}  // namespace attnorm::ad
