#pragma once

// Minimal reverse-mode tape. Each node stores at most two parents together
// with the local partial derivatives; a backward sweep from an output node
// yields adjoints for every node, including the leaves. Var is a cheap
// handle (tape pointer, value, node index) with the usual operator set.
//
// The same numeric kernels back the plain-double overloads, so templated
// code instantiated at double and at Var produces bit-identical values.

#include <cmath>
#include <cstddef>
#include <vector>

#include "vfa/errors.hpp"

namespace vfa::ad {

class Tape;

class Var {
 public:
  Var() = default;
  Var(Tape* tape, double value, int index) : tape_(tape), v_(value), i_(index) {}

  double value() const { return v_; }
  int index() const { return i_; }
  Tape* tape() const { return tape_; }

 private:
  Tape* tape_ = nullptr;
  double v_ = 0.0;
  int i_ = -1;
};

class Tape {
 public:
  Var leaf(double value) {
    nodes_.push_back(Node{});
    return Var(this, value, static_cast<int>(nodes_.size()) - 1);
  }

  Var unary(const Var& a, double value, double da) {
    nodes_.push_back(Node{a.index(), -1, da, 0.0});
    return Var(this, value, static_cast<int>(nodes_.size()) - 1);
  }

  Var binary(const Var& a, const Var& b, double value, double da, double db) {
    nodes_.push_back(Node{a.index(), b.index(), da, db});
    return Var(this, value, static_cast<int>(nodes_.size()) - 1);
  }

  std::size_t size() const { return nodes_.size(); }

  // Adjoints of every node with respect to `output`.
  std::vector<double> gradient(const Var& output) const {
    std::vector<double> adj(nodes_.size(), 0.0);
    adj[output.index()] = 1.0;
    for (int i = static_cast<int>(nodes_.size()) - 1; i >= 0; --i) {
      const Node& n = nodes_[i];
      const double a = adj[i];
      if (a == 0.0) continue;
      if (n.a >= 0) adj[n.a] += a * n.da;
      if (n.b >= 0) adj[n.b] += a * n.db;
    }
    return adj;
  }

 private:
  struct Node {
    int a = -1;
    int b = -1;
    double da = 0.0;
    double db = 0.0;
  };
  std::vector<Node> nodes_;
};

// --- numeric kernels shared by both scalar types ---

inline double sigmoid_value(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

// --- double overloads (identity wrappers) ---

inline double value_of(double x) { return x; }
inline double exp(double x) { return std::exp(x); }
inline double log(double x) { return std::log(x); }
inline double sqrt(double x) { return std::sqrt(x); }
inline double tanh(double x) { return std::tanh(x); }
inline double sigmoid(double x) { return sigmoid_value(x); }
inline double vabs(double x) { return x >= 0.0 ? x : -x; }
// First argument wins ties; the Var overloads take the matching subgradient.
inline double vmin(double a, double b) { return a <= b ? a : b; }
inline double vmax(double a, double b) { return a >= b ? a : b; }
inline double make_like(double /*proto*/, double c) { return c; }

// --- Var arithmetic ---

inline double value_of(const Var& x) { return x.value(); }

inline Var operator+(const Var& a, const Var& b) {
  return a.tape()->binary(a, b, a.value() + b.value(), 1.0, 1.0);
}
inline Var operator-(const Var& a, const Var& b) {
  return a.tape()->binary(a, b, a.value() - b.value(), 1.0, -1.0);
}
inline Var operator*(const Var& a, const Var& b) {
  return a.tape()->binary(a, b, a.value() * b.value(), b.value(), a.value());
}
inline Var operator/(const Var& a, const Var& b) {
  const double inv = 1.0 / b.value();
  return a.tape()->binary(a, b, a.value() / b.value(), inv, -a.value() * inv * inv);
}
inline Var operator-(const Var& a) { return a.tape()->unary(a, -a.value(), -1.0); }

inline Var operator+(const Var& a, double c) { return a.tape()->unary(a, a.value() + c, 1.0); }
inline Var operator+(double c, const Var& a) { return a.tape()->unary(a, c + a.value(), 1.0); }
inline Var operator-(const Var& a, double c) { return a.tape()->unary(a, a.value() - c, 1.0); }
inline Var operator-(double c, const Var& a) { return a.tape()->unary(a, c - a.value(), -1.0); }
inline Var operator*(const Var& a, double c) { return a.tape()->unary(a, a.value() * c, c); }
inline Var operator*(double c, const Var& a) { return a.tape()->unary(a, c * a.value(), c); }
inline Var operator/(const Var& a, double c) { return a.tape()->unary(a, a.value() / c, 1.0 / c); }
inline Var operator/(double c, const Var& a) {
  const double inv = 1.0 / a.value();
  return a.tape()->unary(a, c * inv, -c * inv * inv);
}

inline Var exp(const Var& a) {
  const double e = std::exp(a.value());
  return a.tape()->unary(a, e, e);
}
inline Var log(const Var& a) { return a.tape()->unary(a, std::log(a.value()), 1.0 / a.value()); }
inline Var sqrt(const Var& a) {
  const double s = std::sqrt(a.value());
  return a.tape()->unary(a, s, 0.5 / s);
}
inline Var tanh(const Var& a) {
  const double t = std::tanh(a.value());
  return a.tape()->unary(a, t, 1.0 - t * t);
}
inline Var sigmoid(const Var& a) {
  const double s = sigmoid_value(a.value());
  return a.tape()->unary(a, s, s * (1.0 - s));
}
inline Var vabs(const Var& a) {
  // Subgradient +1 at zero, consistent with vabs(double).
  return a.value() >= 0.0 ? a.tape()->unary(a, a.value(), 1.0)
                          : a.tape()->unary(a, -a.value(), -1.0);
}
inline Var vmin(const Var& a, const Var& b) {
  return a.value() <= b.value() ? a.tape()->binary(a, b, a.value(), 1.0, 0.0)
                                : a.tape()->binary(a, b, b.value(), 0.0, 1.0);
}
inline Var vmax(const Var& a, const Var& b) {
  return a.value() >= b.value() ? a.tape()->binary(a, b, a.value(), 1.0, 0.0)
                                : a.tape()->binary(a, b, b.value(), 0.0, 1.0);
}
inline Var make_like(const Var& proto, double c) { return proto.tape()->leaf(c); }

// Temperature-scaled log-sum-exp, the smooth stand-in for max. Stabilized
// around the running hard max; the stabilizer shift cancels in both the
// value and the gradient, so treating it as a constant is exact.
template <class T>
T lse(const std::vector<T>& xs, double tau) {
  double m = value_of(xs[0]);
  for (const T& x : xs) m = m >= value_of(x) ? m : value_of(x);
  T sum = exp((xs[0] - m) / tau);
  for (std::size_t i = 1; i < xs.size(); ++i) sum = sum + exp((xs[i] - m) / tau);
  return m + tau * log(sum);
}

}  // namespace vfa::ad
