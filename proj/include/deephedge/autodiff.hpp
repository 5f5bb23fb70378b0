#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <vector>

#include "deephedge/payoff.hpp"

namespace deephedge::ad {

class Tape;

/// A scalar on a tape. Constants carry no tape and never receive gradients.
class Var {
 public:
  Var() = default;
  Var(double constant) : value_(constant) {}  // NOLINT(google-explicit-constructor)

  double value() const noexcept { return value_; }
  bool is_constant() const noexcept { return tape_ == nullptr; }
  std::int32_t index() const noexcept { return index_; }
  Tape* tape() const noexcept { return tape_; }

 private:
  friend class Tape;
  Var(Tape* tape, std::int32_t index, double value) : tape_(tape), index_(index), value_(value) {}

  Tape* tape_ = nullptr;
  std::int32_t index_ = -1;
  double value_ = 0.0;
};

/// Append-only Wengert list. Each node stores up to two operand indices and the
/// local partial derivative with respect to each, so the tape is topologically
/// ordered by construction.
class Tape {
 public:
  struct Node {
    std::int32_t lhs = -1;
    std::int32_t rhs = -1;
    double dlhs = 0.0;
    double drhs = 0.0;
  };

  Var variable(double value) { return push(value, -1, 0.0, -1, 0.0); }

  /// Records a node with local partials against up to two operands; constant
  /// operands are dropped. Returns a constant if no operand is on a tape.
  Var record(double value, const Var& a, double da, const Var& b = {}, double db = 0.0) {
    Tape* owner = a.tape_ ? a.tape_ : b.tape_;
    if (owner == nullptr) return Var(value);
    if ((a.tape_ && a.tape_ != owner) || (b.tape_ && b.tape_ != owner))
      throw std::invalid_argument("autodiff: operands live on different tapes");
    return owner->push(value, a.tape_ ? a.index_ : -1, da, b.tape_ ? b.index_ : -1, db);
  }

  std::size_t size() const noexcept { return nodes_.size(); }
  const std::vector<Node>& nodes() const noexcept { return nodes_; }
  const std::vector<double>& values() const noexcept { return values_; }

  void clear() noexcept {
    nodes_.clear();
    values_.clear();
  }
  void reserve(std::size_t n) {
    nodes_.reserve(n);
    values_.reserve(n);
  }

 private:
  Var push(double value, std::int32_t lhs, double dlhs, std::int32_t rhs, double drhs) {
    if (nodes_.size() >= static_cast<std::size_t>(std::numeric_limits<std::int32_t>::max()))
      throw std::length_error("autodiff: tape is full");
    const auto index = static_cast<std::int32_t>(nodes_.size());
    nodes_.push_back({lhs, rhs, dlhs, drhs});
    values_.push_back(value);
    return Var(this, index, value);
  }

  std::vector<Node> nodes_;
  std::vector<double> values_;
};

/// Adjoints of every node up to and including the output.
struct Adjoints {
  std::vector<double> values;
  std::size_t visits = 0;

  double wrt(const Var& v) const noexcept {
    if (v.is_constant() || static_cast<std::size_t>(v.index()) >= values.size()) return 0.0;
    return values[static_cast<std::size_t>(v.index())];
  }
};

/// Reverse sweep from `output`; each node at or below the output is visited once.
inline Adjoints backward(const Tape& tape, const Var& output) {
  if (output.is_constant())
    throw std::invalid_argument("backward: output is a constant, not a node on the tape");
  if (output.tape() != &tape || static_cast<std::size_t>(output.index()) >= tape.size())
    throw std::invalid_argument("backward: output node does not belong to this tape");
  const auto n = static_cast<std::size_t>(output.index()) + 1;
  Adjoints adj{std::vector<double>(n, 0.0), 0};
  adj.values[n - 1] = 1.0;
  const auto& nodes = tape.nodes();
  for (std::size_t i = n; i-- > 0;) {
    ++adj.visits;
    const double bar = adj.values[i];
    if (bar == 0.0) continue;
    const auto& node = nodes[i];
    if (node.lhs >= 0) adj.values[static_cast<std::size_t>(node.lhs)] += bar * node.dlhs;
    if (node.rhs >= 0) adj.values[static_cast<std::size_t>(node.rhs)] += bar * node.drhs;
  }
  return adj;
}

namespace detail {
inline Var record(double value, const Var& a, double da, const Var& b = {}, double db = 0.0) {
  Tape* owner = a.tape() ? a.tape() : b.tape();
  if (owner == nullptr) return Var(value);
  return owner->record(value, a, da, b, db);
}
}  // namespace detail

inline Var operator+(const Var& a, const Var& b) {
  return detail::record(a.value() + b.value(), a, 1.0, b, 1.0);
}
inline Var operator-(const Var& a, const Var& b) {
  return detail::record(a.value() - b.value(), a, 1.0, b, -1.0);
}
inline Var operator*(const Var& a, const Var& b) {
  return detail::record(a.value() * b.value(), a, b.value(), b, a.value());
}
inline Var operator/(const Var& a, const Var& b) {
  const double inv = 1.0 / b.value();
  const double q = a.value() * inv;
  return detail::record(q, a, inv, b, -q * inv);
}
inline Var operator-(const Var& a) { return detail::record(-a.value(), a, -1.0); }

inline Var& operator+=(Var& a, const Var& b) { return a = a + b; }
inline Var& operator-=(Var& a, const Var& b) { return a = a - b; }
inline Var& operator*=(Var& a, const Var& b) { return a = a * b; }

inline Var exp(const Var& a) {
  const double e = std::exp(a.value());
  return detail::record(e, a, e);
}
inline Var log(const Var& a) { return detail::record(std::log(a.value()), a, 1.0 / a.value()); }

/// max(a, c) for a constant c; the derivative is 0 at the tie.
inline Var max(const Var& a, double c) {
  return a.value() > c ? detail::record(a.value(), a, 1.0) : Var(c);
}
/// d|x|/dx := 0 at x == 0.
inline Var abs(const Var& a) {
  const double x = a.value();
  return detail::record(std::abs(x), a, x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0));
}
/// x^c for x >= 0. At x == 0 the derivative is taken as 1 for c == 1 and 0 otherwise.
inline Var pow(const Var& a, double c) {
  const double x = a.value();
  if (x == 0.0) return detail::record(std::pow(x, c), a, c == 1.0 ? 1.0 : 0.0);
  const double y = std::pow(x, c);
  return detail::record(y, a, c * y / x);
}
inline Var norm_cdf(const Var& a) {
  return detail::record(deephedge::norm_cdf(a.value()), a, deephedge::norm_pdf(a.value()));
}

inline Var relu(const Var& a) { return max(a, 0.0); }

}  // namespace deephedge::ad
