#include "helpers.hpp"

using namespace pessim;
using namespace pessim::testing;

TEST(Example1Oracle, Values) {
  const auto b = make_example1();
  EXPECT_DOUBLE_EQ(b.oracle.psi_p_t(v1(0.5), 0.1), 0.2);
  EXPECT_EQ(b.oracle.psi_p_t(v1(0.05), 0.1), 1.0);
  EXPECT_EQ(b.oracle.psi_p(v1(0.0)), 1.0);
  EXPECT_EQ(b.oracle.psi_p(v1(0.7)), 0.0);
  EXPECT_DOUBLE_EQ(detail::u1_star(1.0, 0.0), 1.0);
  EXPECT_DOUBLE_EQ(detail::u1_star(0.0, 0.5), 1.0);
}

TEST(Example2Oracle, Values) {
  const auto b = make_example2();
  EXPECT_EQ(b.oracle.psi_p_t(v1(-1.0), 0.3), 0.0);
  EXPECT_DOUBLE_EQ(b.oracle.psi_p_t(v1(0.5), 0.1), 0.7);
  EXPECT_EQ(b.oracle.psi_p(v1(0.5)), 0.5);
  EXPECT_EQ(b.oracle.psi_p(v1(0.0)), 1.0);
  ASSERT_TRUE(b.oracle.known_optimum.has_value());
  EXPECT_EQ(b.oracle.known_optimum->x[0], -1.0);
  EXPECT_EQ(b.oracle.known_optimum->value, 0.0);
}

TEST(Oracles, RelaxedValueBoundsTheTrueValue) {
  std::mt19937_64 rng(8);
  for (const auto& name : {"example1", "example2", "biactive1d"}) {
    const auto b = make_benchmark(name);
    const Box& X = b.problem.leader_box();
    std::uniform_real_distribution<double> Ux(X.lower[0], X.upper[0]), Ut(0.0, 1.0);
    for (int r = 0; r < 200; ++r) {
      const Vector x = v1(Ux(rng));
      const double t = Ut(rng);
      EXPECT_GE(b.oracle.psi_p_t(x, t), b.oracle.psi_p(x)) << name << " x=" << x[0] << " t=" << t;
    }
  }
}

TEST(Oracles, ArgmaxSamplesLieInTheRelaxedSet) {
  for (const auto& name : {"example1", "example2", "biactive1d"}) {
    const auto b = make_benchmark(name);
    for (double x : {-0.8, 0.0, 0.3, 1.0}) {
      if (b.problem.leader_violation(v1(x)) > 0) continue;
      for (double t : {0.0, 0.1, 0.5}) {
        const auto s = b.oracle.s_p_t(v1(x), t, 20);
        ASSERT_FALSE(s.empty()) << name;
        for (const auto& z : s.points) {
          const auto pt = TriplePoint::from_follower(v1(x), z, 1);
          EXPECT_TRUE(kkt_residual(b.problem, pt, t).is_member(1e-12)) << name << " x=" << x << " t=" << t;
          EXPECT_NEAR(b.problem.F(pt.x, pt.y), b.oracle.psi_p_t(v1(x), t), 1e-12) << name;
        }
      }
    }
  }
}

TEST(Oracles, ClosedFormRelaxedSetMembers) {
  const auto b = make_example1();
  for (double x : {0.0, 0.4, 1.0})
    for (double t : {0.0, 0.05, 0.3})
      for (const auto& z : b.oracle.d_set(v1(x), t, 15).points)
        EXPECT_TRUE(kkt_residual(b.problem, TriplePoint::from_follower(v1(x), z, 1), t).is_member(1e-12));
}

TEST(Crosscheck, Example1Grid) {
  std::vector<Vector> xs;
  for (int i = 1; i <= 20; ++i) xs.push_back(v1(0.05 * i));
  const auto rep = oracle_crosscheck("example1", xs, {0.5, 0.2, 0.1, 0.05, 0.01}, 400);
  EXPECT_EQ(rep.entries.size(), 100u);
  EXPECT_LE(rep.max_gap, 0.02);
}

TEST(Crosscheck, Example2NegativeHalf) {
  std::vector<Vector> xs;
  for (int i = 0; i < 10; ++i) xs.push_back(v1(-1.0 + 0.1 * i));
  const auto rep = oracle_crosscheck("example2", xs, {0.5, 0.1, 0.0}, 400);
  EXPECT_LE(rep.max_gap, 0.02);
}

TEST(Crosscheck, SinglePointAtTheOptimum) {
  const auto rep = oracle_crosscheck("example2", {v1(-1.0)}, {0.0}, 400);
  ASSERT_EQ(rep.entries.size(), 1u);
  EXPECT_LE(rep.max_gap, kDefaultFeasTol);
}

TEST(Crosscheck, NeedsAClosedForm) {
  EXPECT_THROW(oracle_crosscheck("synthetic2d", {v2(0, 0)}, {0.1}), UsageError);
}

TEST(Example2Oracle, ContinuousInX) {
  // The slope of x + t/x is at most 1/t - 1 in magnitude, so L = 10 covers t >= 0.1.
  const auto b = make_example2();
  const double h = 1e-3;
  for (double t : {0.1, 0.2, 0.5, 1.0}) {
    double worst = 0.0;
    for (int i = 0; i < 2000; ++i) {
      const double x = -1.0 + h * i;
      worst = std::max(worst, std::abs(b.oracle.psi_p_t(v1(x + h), t) - b.oracle.psi_p_t(v1(x), t)));
    }
    EXPECT_LE(worst, 10.0 * h) << t;
  }
}

TEST(Benchmarks, NamesAndErrors) {
  for (const auto& n : benchmark_names()) EXPECT_EQ(make_benchmark(n).problem.name(), n);
  EXPECT_THROW(make_benchmark("example3"), UsageError);
  EXPECT_FALSE(make_synthetic2d().oracle.has_closed_form());
}

TEST(Benchmarks, DefaultStartsAreInX) {
  for (const auto& n : benchmark_names()) {
    const auto b = make_benchmark(n);
    EXPECT_EQ(b.problem.leader_violation(b.default_x0), 0.0) << n;
    EXPECT_EQ(b.follower_grid_box.size(), static_cast<Eigen::Index>(b.problem.m() + b.problem.q())) << n;
  }
}
