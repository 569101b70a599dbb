#pragma once

#include "pessim/pessim.hpp"

#include <gtest/gtest.h>

#include <random>

namespace pessim::testing {

inline Vector v1(double a) { return Vector::Constant(1, a); }
inline Vector v2(double a, double b) {
  Vector v(2);
  v << a, b;
  return v;
}
inline Vector v3(double a, double b, double c) {
  Vector v(3);
  v << a, b, c;
  return v;
}

inline TriplePoint triple(double x, double y, double u1, double u2) { return TriplePoint{v1(x), v1(y), v2(u1, u2)}; }

// Leader interval [lo, hi] as G = (lo - x, x - hi).
inline void interval(ProblemFunctions& fns, double lo, double hi) {
  fns.G = [lo, hi](const Vector& x) { return v2(lo - x[0], x[0] - hi); };
  fns.jac_G = [](const Vector&) {
    Matrix J(2, 1);
    J << -1.0, 1.0;
    return J;
  };
}

/// f = 1/2 (y - x)^2 with no lower-level constraints, F = c (y - 1/2)^2 + c x^2, X = [-1, 1].
inline BilevelProblem unconstrained_follower(double c = 1.0) {
  ProblemFunctions fns;
  fns.F = [c](const Vector& x, const Vector& y) { return c * ((y[0] - 0.5) * (y[0] - 0.5) + x[0] * x[0]); };
  fns.grad_F = [c](const Vector& x, const Vector& y) { return PartialGradient{v1(2 * c * x[0]), v1(2 * c * (y[0] - 0.5))}; };
  fns.f = [](const Vector& x, const Vector& y) { return 0.5 * (y[0] - x[0]) * (y[0] - x[0]); };
  fns.grad_f = [](const Vector& x, const Vector& y) { return PartialGradient{v1(x[0] - y[0]), v1(y[0] - x[0])}; };
  interval(fns, -1.0, 1.0);
  return BilevelProblem("unconstrained", ProblemDims{1, 1, 2, 0}, std::move(fns));
}

/// K(x) = {y : y - 1 <= 0, 1 - y <= 0}: one constraint and its negation.
inline BilevelProblem opposed_pair() {
  ProblemFunctions fns;
  fns.F = [](const Vector&, const Vector& y) { return y[0]; };
  fns.grad_F = [](const Vector&, const Vector&) { return PartialGradient{v1(0.0), v1(1.0)}; };
  fns.f = [](const Vector& x, const Vector& y) { return 0.5 * (y[0] - x[0]) * (y[0] - x[0]); };
  fns.grad_f = [](const Vector& x, const Vector& y) { return PartialGradient{v1(x[0] - y[0]), v1(y[0] - x[0])}; };
  fns.g = [](const Vector&, const Vector& y) { return v2(y[0] - 1.0, 1.0 - y[0]); };
  fns.jac_g = [](const Vector&, const Vector&) {
    Matrix dy(2, 1);
    dy << 1.0, -1.0;
    return PartialJacobian{Matrix::Zero(2, 1), dy};
  };
  interval(fns, -2.0, 2.0);
  return BilevelProblem("opposed_pair", ProblemDims{1, 1, 2, 2}, std::move(fns));
}

/// Example-1 follower with F scaled by c > 0.
inline BilevelProblem scaled_example1(double c) {
  const Benchmark b = make_example1();
  ProblemFunctions fns = b.problem.functions();
  fns.F = [c](const Vector&, const Vector& y) { return c * y[0]; };
  fns.grad_F = [c](const Vector&, const Vector&) { return PartialGradient{v1(0.0), v1(c)}; };
  BilevelProblem p("example1_scaled", b.problem.dims(), std::move(fns));
  p.set_leader_box(b.problem.leader_box()).set_follower_box(b.problem.follower_box());
  return p;
}

/// Copy of a problem with lower-level constraint rows multiplied by w_i > 0.
inline BilevelProblem rescale_g(const BilevelProblem& base, const Vector& w) {
  ProblemFunctions fns = base.functions();
  auto g = fns.g;
  auto jg = fns.jac_g;
  fns.g = [g, w](const Vector& x, const Vector& y) { return Vector(g(x, y).cwiseProduct(w)); };
  fns.jac_g = [jg, w](const Vector& x, const Vector& y) {
    PartialJacobian J = jg(x, y);
    J.dx = w.asDiagonal() * J.dx;
    J.dy = w.asDiagonal() * J.dy;
    return J;
  };
  fns.hess_g_yx = nullptr;
  fns.hess_g_yy = nullptr;
  BilevelProblem p(base.name() + "_rescaled", base.dims(), std::move(fns));
  p.set_leader_box(base.leader_box());
  if (!base.follower_box().empty()) p.set_follower_box(base.follower_box());
  return p;
}

inline InnerConfig fast_inner(std::uint64_t seed = 0) {
  InnerConfig c;
  c.seed = seed;
  return c;
}

}  // namespace pessim::testing
