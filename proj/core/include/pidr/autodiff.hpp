#pragma once

#include <cassert>
#include <cmath>
#include <cstddef>
#include <vector>

namespace pidr {

/// Minimal reverse-mode tape over scalar operations.
///
/// Each recorded node stores up to two parent indices and the local partial
/// derivatives with respect to them. Constants are not recorded: a Var with
/// a negative index folds its value into the partials of downstream nodes.
/// The tape is meant to be cleared and reused between evaluations; the
/// residual computations in the physics loss record a few hundred nodes per
/// collocation point.
class Tape {
 public:
  struct Node {
    int parent[2];
    double partial[2];
  };

  int add_leaf() {
    nodes_.push_back(Node{{-1, -1}, {0.0, 0.0}});
    return static_cast<int>(nodes_.size()) - 1;
  }

  int add_unary(int p0, double d0) {
    nodes_.push_back(Node{{p0, -1}, {d0, 0.0}});
    return static_cast<int>(nodes_.size()) - 1;
  }

  int add_binary(int p0, double d0, int p1, double d1) {
    nodes_.push_back(Node{{p0, p1}, {d0, d1}});
    return static_cast<int>(nodes_.size()) - 1;
  }

  void clear() { nodes_.clear(); }

  std::size_t size() const { return nodes_.size(); }

  /// Accumulates d(root)/d(node) for every node into the adjoint buffer.
  /// Nodes are recorded in evaluation order, so a single reverse sweep is a
  /// valid topological order.
  void backward(int root, std::vector<double>& adjoints) const {
    adjoints.assign(nodes_.size(), 0.0);
    if (root < 0) return;
    adjoints[static_cast<std::size_t>(root)] = 1.0;
    for (int i = static_cast<int>(nodes_.size()) - 1; i >= 0; --i) {
      const double a = adjoints[static_cast<std::size_t>(i)];
      if (a == 0.0) continue;
      const Node& n = nodes_[static_cast<std::size_t>(i)];
      for (int k = 0; k < 2; ++k) {
        if (n.parent[k] >= 0) {
          adjoints[static_cast<std::size_t>(n.parent[k])] += a * n.partial[k];
        }
      }
    }
  }

 private:
  std::vector<Node> nodes_;
};

/// A scalar tracked on a Tape. Implicitly constructible from double, in
/// which case it acts as a constant and records nothing.
class Var {
 public:
  Var() : tape_(nullptr), idx_(-1), v_(0.0) {}
  Var(double value) : tape_(nullptr), idx_(-1), v_(value) {}  // NOLINT
  Var(Tape* tape, int idx, double value) : tape_(tape), idx_(idx), v_(value) {}

  static Var leaf(Tape& tape, double value) {
    return Var(&tape, tape.add_leaf(), value);
  }

  double value() const { return v_; }
  int index() const { return idx_; }
  bool is_const() const { return idx_ < 0; }
  Tape* tape() const { return tape_; }

  friend Var operator+(const Var& a, const Var& b) {
    return binary(a, b, a.v_ + b.v_, 1.0, 1.0);
  }
  friend Var operator-(const Var& a, const Var& b) {
    return binary(a, b, a.v_ - b.v_, 1.0, -1.0);
  }
  friend Var operator*(const Var& a, const Var& b) {
    return binary(a, b, a.v_ * b.v_, b.v_, a.v_);
  }
  friend Var operator/(const Var& a, const Var& b) {
    return binary(a, b, a.v_ / b.v_, 1.0 / b.v_, -a.v_ / (b.v_ * b.v_));
  }
  friend Var operator-(const Var& a) {
    return unary(a, -a.v_, -1.0);
  }

  Var& operator+=(const Var& rhs) { return *this = *this + rhs; }
  Var& operator-=(const Var& rhs) { return *this = *this - rhs; }
  Var& operator*=(const Var& rhs) { return *this = *this * rhs; }

  friend Var sin(const Var& a) { return unary(a, std::sin(a.v_), std::cos(a.v_)); }
  friend Var cos(const Var& a) { return unary(a, std::cos(a.v_), -std::sin(a.v_)); }
  friend Var tan(const Var& a) {
    const double t = std::tan(a.v_);
    return unary(a, t, 1.0 + t * t);
  }
  friend Var sqrt(const Var& a) {
    const double s = std::sqrt(a.v_);
    return unary(a, s, 0.5 / s);
  }
  friend Var square(const Var& a) { return unary(a, a.v_ * a.v_, 2.0 * a.v_); }

 private:
  static Var unary(const Var& a, double value, double da) {
    if (a.is_const()) return Var(value);
    return Var(a.tape_, a.tape_->add_unary(a.idx_, da), value);
  }

  static Var binary(const Var& a, const Var& b, double value, double da,
                    double db) {
    Tape* tape = a.tape_ ? a.tape_ : b.tape_;
    if (!tape) return Var(value);
    assert(a.is_const() || b.is_const() || a.tape_ == b.tape_);
    if (a.is_const() && b.is_const()) return Var(value);
    if (a.is_const()) return Var(tape, tape->add_unary(b.idx_, db), value);
    if (b.is_const()) return Var(tape, tape->add_unary(a.idx_, da), value);
    return Var(tape, tape->add_binary(a.idx_, da, b.idx_, db), value);
  }

  Tape* tape_;
  int idx_;
  double v_;
};

}  // namespace pidr
