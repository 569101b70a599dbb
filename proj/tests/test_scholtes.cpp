#include "helpers.hpp"

using namespace pessim;
using namespace pessim::testing;

TEST(MinimizePsiT, Example1MovesToTheRightEnd) {
  const auto r = minimize_psi_t(make_example1().problem, 0.1, v1(0.5));
  EXPECT_EQ(r.status, OuterStatus::converged);
  EXPECT_NEAR(r.x_star[0], 1.0, 1e-3);
  EXPECT_NEAR(r.value, 0.1, 1e-3);
  EXPECT_LE(r.final_mesh, 1e-5);
}

TEST(MinimizePsiT, Example2FindsTheGlobalMinimizer) {
  const auto r = minimize_psi_t(make_example2().problem, 0.25, v1(0.0));
  EXPECT_NEAR(r.x_star[0], -1.0, 1e-3);
  EXPECT_NEAR(r.value, 0.0, 1e-3);
  EXPECT_FALSE(r.argmax.empty());
}

TEST(MinimizePsiT, SinglePointLeaderSet) {
  ProblemFunctions fns = make_example1().problem.functions();
  interval(fns, 0.4, 0.4);
  BilevelProblem p("pinned", ProblemDims{1, 1, 2, 2}, fns);
  p.set_leader_box(Box{v1(0.4), v1(0.4)}).set_follower_box(Box::uniform(1, 0.0, 1.0));
  const auto r = minimize_psi_t(p, 0.1, v1(0.4));
  EXPECT_EQ(r.x_star[0], 0.4);
  EXPECT_NEAR(r.value, 0.25, 1e-4);
}

TEST(MinimizePsiT, InfeasibleEverywhereIsAFailure) {
  ProblemFunctions fns = opposed_pair().functions();
  fns.g = [](const Vector&, const Vector& y) { return v2(y[0] - 1.0, 2.0 - y[0]); };
  BilevelProblem p("empty", ProblemDims{1, 1, 2, 2}, fns);
  p.set_leader_box(Box::uniform(1, -2.0, 2.0));
  InnerConfig icfg;
  icfg.starts = 4;
  OuterConfig ocfg;
  ocfg.max_evals = 10;
  const auto r = minimize_psi_t(p, 0.1, v1(0.0), icfg, ocfg);
  EXPECT_EQ(r.status, OuterStatus::failure);
  EXPECT_FALSE(r.diagnostic.empty());

  RelaxationParams params;
  params.inner = icfg;
  params.outer = ocfg;
  const auto trace = scholtes_solve(p, params, v1(0.0));
  EXPECT_EQ(trace.terminal, TerminalReason::failure);
  EXPECT_TRUE(trace.records.empty());
  EXPECT_NE(trace.failure_reason.find("k=0"), std::string::npos);
}

TEST(RelaxationParams, Validation) {
  RelaxationParams p;
  p.rho = 1.0;
  EXPECT_THROW(p.validate(), UsageError);
  p.rho = 0.5;
  p.t_min = 2.0;
  EXPECT_THROW(p.validate(), UsageError);
  p.t_min = 0.0;
  EXPECT_THROW(p.validate(), UsageError);
  p.t_min = 1e-3;
  EXPECT_NO_THROW(p.validate());
}

TEST(ScholtesSolve, GeometricSchedule) {
  RelaxationParams p;
  p.t0 = 1.0;
  p.rho = 0.5;
  p.t_min = 0.05;
  const auto trace = scholtes_solve(make_example2().problem, p, v1(0.5));
  ASSERT_EQ(trace.records.size(), 5u);
  EXPECT_EQ(trace.terminal, TerminalReason::t_min_reached);
  double t = 1.0;
  for (std::size_t k = 0; k < trace.records.size(); ++k, t *= 0.5) {
    EXPECT_EQ(trace.records[k].k, k);
    EXPECT_EQ(trace.records[k].t, t);
    if (k) EXPECT_LT(trace.records[k].t, trace.records[k - 1].t);
  }
}

TEST(ScholtesSolve, Example2ShortScheduleReachesTheOptimum) {
  RelaxationParams p;
  p.t_min = 0.05;
  const auto trace = scholtes_solve(make_example2().problem, p, v1(0.5));
  for (const auto& r : trace.records) {
    EXPECT_NEAR(r.x[0], -1.0, 1e-3);
    EXPECT_NEAR(r.psi, 0.0, 1e-3);
    EXPECT_LE(r.argmax_residual, 1e-8);
  }
}

TEST(ScholtesSolve, LeaderStepStop) {
  RelaxationParams p;
  p.t_min = 1e-6;
  p.x_tol = 1e-9;
  const auto trace = scholtes_solve(make_example2().problem, p, v1(0.5));
  EXPECT_EQ(trace.terminal, TerminalReason::x_converged);
  EXPECT_EQ(trace.records.size(), 3u);
}

TEST(ScholtesSolve, IterationCap) {
  RelaxationParams p;
  p.t_min = 1e-6;
  p.max_outer_iters = 2;
  const auto trace = scholtes_solve(make_example2().problem, p, v1(0.5));
  EXPECT_EQ(trace.terminal, TerminalReason::max_iters);
  EXPECT_EQ(trace.records.size(), 2u);
}

TEST(ScholtesSolve, StartOutsideXIsProjected) {
  RelaxationParams p;
  p.t_min = 0.2;
  const auto trace = scholtes_solve(make_example2().problem, p, v1(5.0));
  ASSERT_FALSE(trace.records.empty());
  EXPECT_NEAR(trace.records.back().x[0], -1.0, 1e-3);
}

TEST(ScholtesSolve, RepeatableWithAFixedSeed) {
  RelaxationParams p;
  p.t_min = 0.1;
  p.seed = 17;
  const auto a = scholtes_solve(make_example2().problem, p, v1(0.5));
  p.inner.threads = 3;
  const auto b = scholtes_solve(make_example2().problem, p, v1(0.5));
  ASSERT_EQ(a.records.size(), b.records.size());
  for (std::size_t k = 0; k < a.records.size(); ++k) {
    EXPECT_EQ(a.records[k].x, b.records[k].x);
    EXPECT_EQ(a.records[k].psi, b.records[k].psi);
    EXPECT_EQ(a.records[k].inner_evals, b.records[k].inner_evals);
    EXPECT_EQ(a.records[k].argmax.points, b.records[k].argmax.points);
  }
}

// psi_k >= psi(x_k) - 2 eps_lvl, and psi_k is nonincreasing along the run.
class HomotopyProperties : public ::testing::TestWithParam<std::string> {};

TEST_P(HomotopyProperties, ValueBoundsAlongTheRun) {
  const auto b = make_benchmark(GetParam());
  RelaxationParams p;
  p.t_min = 0.03;
  const auto trace = scholtes_solve(b.problem, p, b.default_x0);
  ASSERT_EQ(trace.terminal, TerminalReason::t_min_reached);
  for (std::size_t k = 0; k < trace.records.size(); ++k) {
    const auto& r = trace.records[k];
    EXPECT_NE(r.inner_status, InnerStatus::infeasible);
    EXPECT_GE(r.psi, b.oracle.psi_p(r.x) - 2 * p.inner.eps_lvl) << "k=" << k;
    if (k) EXPECT_LE(r.psi, trace.records[k - 1].psi + p.outer.decrease_tol) << "k=" << k;
  }
}

INSTANTIATE_TEST_SUITE_P(BuiltIn, HomotopyProperties, ::testing::Values("example1", "example2", "biactive1d"));
