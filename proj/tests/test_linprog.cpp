#include "helpers.hpp"

using namespace pessim;
using namespace pessim::testing;

TEST(LinearProgram, SmallMaximization) {
  // max x + y s.t. x + 2y <= 4, 3x + y <= 6, x, y >= 0  ->  (1.6, 1.2).
  LinearProgram lp(2);
  lp.c << -1.0, -1.0;
  lp.add_ub(v2(1, 2), 4);
  lp.add_ub(v2(3, 1), 6);
  const auto r = solve_lp(lp);
  ASSERT_EQ(r.status, LpStatus::optimal);
  EXPECT_NEAR(r.x[0], 1.6, 1e-10);
  EXPECT_NEAR(r.x[1], 1.2, 1e-10);
  EXPECT_NEAR(r.objective, -2.8, 1e-10);
}

TEST(LinearProgram, EqualitiesAndFreeVariables) {
  // min |x| surrogate: x free, x = -3 forces the value.
  LinearProgram lp(1);
  lp.lower[0] = -INFINITY;
  lp.c[0] = 1.0;
  lp.add_eq(v1(1.0), -3.0);
  const auto r = solve_lp(lp);
  ASSERT_EQ(r.status, LpStatus::optimal);
  EXPECT_NEAR(r.x[0], -3.0, 1e-12);
}

TEST(LinearProgram, InfeasibleIsReported) {
  LinearProgram lp(1);
  lp.add_ub(v1(1.0), -1.0);  // x <= -1 with x >= 0
  EXPECT_EQ(solve_lp(lp).status, LpStatus::infeasible);
}

TEST(LinearProgram, UnboundedIsReported) {
  LinearProgram lp(2);
  lp.c << -1.0, 0.0;
  lp.add_ub(v2(-1, 1), 1);
  EXPECT_EQ(solve_lp(lp).status, LpStatus::unbounded);
}

TEST(LinearProgram, BoxBoundsAreRespected) {
  LinearProgram lp(2);
  lp.lower << -1.0, 0.5;
  lp.upper << 1.0, 2.0;
  lp.c << 1.0, -1.0;
  const auto r = solve_lp(lp);
  ASSERT_EQ(r.status, LpStatus::optimal);
  EXPECT_NEAR(r.x[0], -1.0, 1e-12);
  EXPECT_NEAR(r.x[1], 2.0, 1e-12);
}

TEST(LinearProgram, DegenerateFixedVariable) {
  LinearProgram lp(2);
  lp.upper << 0.0, INFINITY;
  lp.c << -1.0, 1.0;
  lp.add_eq(v2(1.0, 1.0), 2.0);
  const auto r = solve_lp(lp);
  ASSERT_EQ(r.status, LpStatus::optimal);
  EXPECT_NEAR(r.x[0], 0.0, 1e-12);
  EXPECT_NEAR(r.x[1], 2.0, 1e-12);
}

// Random feasible LPs: the solution must satisfy the constraints and beat
// every vertex of a random sample of feasible points.
TEST(LinearProgram, RandomFeasibleProblems) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  for (int trial = 0; trial < 200; ++trial) {
    const Eigen::Index n = 2 + trial % 4, mu = 1 + trial % 3, me = trial % 2;
    Vector x0(n);
    for (auto& v : x0) v = 0.5 * (unit(rng) + 1.0);
    LinearProgram lp(n);
    lp.upper.setConstant(2.0);
    for (auto& v : lp.c) v = unit(rng);
    for (Eigen::Index i = 0; i < mu; ++i) {
      Vector a(n);
      for (auto& v : a) v = unit(rng);
      lp.add_ub(a, a.dot(x0) + 0.1);
    }
    for (Eigen::Index i = 0; i < me; ++i) {
      Vector a(n);
      for (auto& v : a) v = unit(rng);
      lp.add_eq(a, a.dot(x0));
    }
    const auto r = solve_lp(lp);
    ASSERT_EQ(r.status, LpStatus::optimal) << trial;
    EXPECT_LE(r.objective, lp.c.dot(x0) + 1e-9);
    if (lp.A_ub.rows()) EXPECT_LE((lp.A_ub * r.x - lp.b_ub).maxCoeff(), 1e-9);
    if (lp.A_eq.rows()) EXPECT_LE((lp.A_eq * r.x - lp.b_eq).cwiseAbs().maxCoeff(), 1e-9);
    EXPECT_GE(r.x.minCoeff(), -1e-12);
    EXPECT_LE(r.x.maxCoeff(), 2.0 + 1e-12);
  }
}
