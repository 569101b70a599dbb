#pragma once

// Points of D(x) shared by the stationarity tests and the acceptance runner.

#include "pessim/pessim.hpp"

#include <string>
#include <utility>
#include <vector>

namespace pessim::fixtures {

inline Vector v1(double a) { return Vector::Constant(1, a); }
inline Vector v2(double a, double b) {
  Vector v(2);
  v << a, b;
  return v;
}
inline TriplePoint triple(double x, double y, double u1, double u2) { return TriplePoint{v1(x), v1(y), v2(u1, u2)}; }

// biactive1d follower with F = cx x + cy y; (0, 0, 0) stays biactive.
inline BilevelProblem biactive_variant(double cx, double cy) {
  ProblemFunctions fns = make_biactive1d().problem.functions();
  fns.F = [cx, cy](const Vector& x, const Vector& y) { return cx * x[0] + cy * y[0]; };
  fns.grad_F = [cx, cy](const Vector&, const Vector&) { return PartialGradient{v1(cx), v1(cy)}; };
  BilevelProblem p("biactive_variant", ProblemDims{1, 1, 2, 1}, std::move(fns));
  p.set_leader_box(Box::uniform(1, -1.0, 1.0)).set_follower_box(Box::uniform(1, 0.0, 2.0));
  return p;
}

struct Fixture {
  std::string name;
  BilevelProblem problem;
  TriplePoint pt;
};

// Points of D(x) for every built-in problem and the variants above.
inline std::vector<Fixture> fixture_points() {
  std::vector<Fixture> out;
  const auto e1 = make_example1().problem;
  const auto e2 = make_example2().problem;
  for (double x : {0.1, 0.5, 1.0}) out.push_back({"ex1", e1, triple(x, 0.0, x, 0.0)});
  for (double y : {0.0, 0.5, 1.0}) out.push_back({"ex1_x0", e1, triple(0.0, y, 0.0, 0.0)});
  for (double x : {-1.0, -0.5}) out.push_back({"ex2_neg", e2, triple(x, 1.0, 0.0, -x)});
  for (double x : {0.3, 1.0}) out.push_back({"ex2_pos", e2, triple(x, 0.0, x, 0.0)});
  out.push_back({"ex2_x0", e2, triple(0.0, 0.0, 0.0, 0.0)});
  const auto b = make_biactive1d().problem;
  for (double x : {-1.0, -0.4, 0.0, 0.6, 1.0})
    out.push_back({"biactive1d", b, TriplePoint{v1(x), v1(std::max(x, 0.0)), v1(std::max(-x, 0.0))}});
  for (const auto& [cx, cy] : std::vector<std::pair<double, double>>{{-1, 2}, {-1, 1}, {1, -2}})
    out.push_back({"variant", biactive_variant(cx, cy), TriplePoint{v1(0.0), v1(0.0), v1(0.0)}});
  const auto s = make_synthetic2d().problem;
  for (const auto& [x1, x2] : std::vector<std::pair<double, double>>{{0.0, 0.5}, {0.5, -0.5}, {-0.3, 0.0}, {1.0, 1.0}}) {
    const double y2 = x2 > 0 ? 0.0 : (x2 < 0 ? 1.0 : 0.0);
    out.push_back({"synthetic2d", s, TriplePoint{v2(x1, x2), v2(x1, y2), v2(std::max(x2, 0.0), std::max(-x2, 0.0))}});
  }
  return out;
}

}  // namespace pessim::fixtures
