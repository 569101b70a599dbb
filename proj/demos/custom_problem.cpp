// A problem defined through the library API: the follower projects x onto
// [0, 1] and the leader pays (y - 1/2)^2 + x^2 / 4.

#include "pessim/pessim.hpp"

#include <cstdio>

int main() {
  using namespace pessim;
  auto one = [](double a) { return Vector::Constant(1, a); };

  ProblemFunctions fns;
  fns.F = [](const Vector& x, const Vector& y) { return (y[0] - 0.5) * (y[0] - 0.5) + 0.25 * x[0] * x[0]; };
  fns.grad_F = [one](const Vector& x, const Vector& y) { return PartialGradient{one(0.5 * x[0]), one(2.0 * (y[0] - 0.5))}; };
  fns.f = [](const Vector& x, const Vector& y) { return 0.5 * (y[0] - x[0]) * (y[0] - x[0]); };
  fns.grad_f = [one](const Vector& x, const Vector& y) { return PartialGradient{one(x[0] - y[0]), one(y[0] - x[0])}; };
  fns.g = [](const Vector&, const Vector& y) {
    Vector g(2);
    g << -y[0], y[0] - 1.0;
    return g;
  };
  fns.jac_g = [](const Vector&, const Vector&) {
    Matrix dy(2, 1);
    dy << -1.0, 1.0;
    return PartialJacobian{Matrix::Zero(2, 1), dy};
  };
  fns.G = [](const Vector& x) {
    Vector G(2);
    G << -2.0 - x[0], x[0] - 2.0;
    return G;
  };
  fns.jac_G = [](const Vector&) {
    Matrix J(2, 1);
    J << -1.0, 1.0;
    return J;
  };
  // Second derivatives are left out and fall back to finite differences.
  BilevelProblem problem("projection", ProblemDims{1, 1, 2, 2}, fns);
  problem.set_leader_box(Box::uniform(1, -2.0, 2.0)).set_follower_box(Box::uniform(1, 0.0, 1.0));

  const auto gc = check_gradients_fd(problem, TriplePoint{one(0.3), one(0.6), Vector::Constant(2, 0.5)});
  std::printf("derivative check: max relative error %.2e\n", gc.max_error());

  for (const double x : {-1.0, 0.0, 0.5, 1.5}) {
    const auto r = evaluate_psi_t(problem, one(x), 0.05);
    std::printf("psi^0.05(%5.2f) = %.6f, %zu argmax point(s)\n", x, r.value, r.argmax.size());
  }

  RelaxationParams params;
  params.t_min = 1e-3;
  const RunTrace trace = scholtes_solve(problem, params, one(1.5));
  const auto& last = trace.records.back();
  std::printf("homotopy: %zu steps, x = %.6f, psi = %.6f (%s)\n", trace.records.size(), last.x[0], last.psi,
              to_string(trace.terminal));
  return 0;
}
