#include "helpers.hpp"

using namespace pessim;
using namespace pessim::testing;

TEST(ProblemDims, RejectsEmptyLeaderOrFollower) {
  EXPECT_THROW((ProblemDims{0, 1, 1, 1}.validate()), UsageError);
  EXPECT_THROW((ProblemDims{1, 0, 1, 1}.validate()), UsageError);
  EXPECT_THROW((ProblemDims{1, 1, 0, 0}.validate()), UsageError);
  EXPECT_NO_THROW((ProblemDims{1, 1, 0, 1}.validate()));
}

TEST(BilevelProblem, MissingEvaluatorsAreRejected) {
  ProblemFunctions fns = make_example1().problem.functions();
  fns.jac_g = nullptr;
  EXPECT_THROW(BilevelProblem("bad", (ProblemDims{1, 1, 2, 2}), fns), UsageError);
}

TEST(BilevelProblem, DimensionMismatchIsUsageError) {
  const auto b = make_example1();
  EXPECT_THROW(b.problem.check_point(TriplePoint{v1(0.5), v1(0.0), v1(0.5)}), UsageError);
  EXPECT_THROW(b.problem.check_leader(v2(0.5, 0.5)), UsageError);
}

TEST(BilevelProblem, Example1Evaluators) {
  const auto& p = make_example1().problem;
  EXPECT_DOUBLE_EQ(p.F(v1(0.3), v1(0.7)), 0.7);
  EXPECT_DOUBLE_EQ(p.f(v1(0.3), v1(0.7)), 0.21);
  EXPECT_TRUE(p.g(v1(0.3), v1(0.7)).isApprox(v2(-0.7, -0.3), 1e-15));
  EXPECT_EQ(p.G(v1(0.3)), v2(-0.3, -0.7));
  EXPECT_DOUBLE_EQ(p.leader_violation(v1(1.5)), 0.5);
  EXPECT_DOUBLE_EQ(p.leader_violation(v1(0.5)), 0.0);
}

TEST(BilevelProblem, LagrangianGradientOfExample1) {
  const auto& p = make_example1().problem;
  // L = x - u1 + u2.
  EXPECT_NEAR(lagrangian_grad(p, triple(0.5, 0.0, 0.5, 0.0))[0], 0.0, 1e-15);
  EXPECT_NEAR(lagrangian_grad(p, triple(0.5, 0.3, 0.2, 0.4))[0], 0.7, 1e-15);
  const auto J = lagrangian_jacobians(p, triple(0.5, 0.3, 0.2, 0.4));
  EXPECT_NEAR(J.dx(0, 0), 1.0, 1e-12);
  EXPECT_NEAR(J.dy(0, 0), 0.0, 1e-12);
  EXPECT_NEAR(J.du(0, 0), -1.0, 1e-12);
  EXPECT_NEAR(J.du(0, 1), 1.0, 1e-12);
}

TEST(BilevelProblem, FallbackHessiansMatchAnalytic) {
  const auto b = make_synthetic2d();
  const auto nh = b.problem.without_hessians();
  ASSERT_TRUE(nh.hessians_are_fallback());
  ASSERT_FALSE(b.problem.hessians_are_fallback());
  const Vector x = v2(0.3, -0.2), y = v2(0.1, 0.6);
  EXPECT_LE((nh.hess_f_yy(x, y) - b.problem.hess_f_yy(x, y)).cwiseAbs().maxCoeff(), 1e-6);
  EXPECT_LE((nh.hess_f_yx(x, y) - b.problem.hess_f_yx(x, y)).cwiseAbs().maxCoeff(), 1e-6);
  const auto a = b.problem.hess_g_yy(x, y), n = nh.hess_g_yy(x, y);
  ASSERT_EQ(a.size(), n.size());
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_LE((a[i] - n[i]).cwiseAbs().maxCoeff(), 1e-6);
}

TEST(GradientCheck, BuiltInProvidersAgreeWithCentralDifferences) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (const auto& name : benchmark_names()) {
    const auto b = make_benchmark(name);
    const Box& xb = b.problem.leader_box();
    const Box& zb = b.follower_grid_box;
    for (int k = 0; k < 10; ++k) {
      Vector x(xb.size()), z(zb.size());
      for (Eigen::Index i = 0; i < x.size(); ++i) x[i] = xb.lower[i] + unit(rng) * (xb.upper[i] - xb.lower[i]);
      for (Eigen::Index i = 0; i < z.size(); ++i) z[i] = zb.lower[i] + unit(rng) * (zb.upper[i] - zb.lower[i]);
      const auto rep = check_gradients_fd(b.problem, TriplePoint::from_follower(x, z, b.problem.m()));
      EXPECT_TRUE(rep.all_finite()) << name;
      EXPECT_LE(rep.max_error(), 1e-5) << name;
    }
  }
}

TEST(GradientCheck, DetectsAWrongProvider) {
  ProblemFunctions fns = make_example1().problem.functions();
  fns.grad_F = [](const Vector&, const Vector&) { return PartialGradient{v1(0.0), v1(2.0)}; };
  const BilevelProblem p("wrong", ProblemDims{1, 1, 2, 2}, fns);
  const auto rep = check_gradients_fd(p, triple(0.5, 0.5, 1.0, 0.5));
  ASSERT_NE(rep.find("grad_F.dy"), nullptr);
  EXPECT_NEAR(rep.find("grad_F.dy")->max_rel_error, 1.0, 1e-6);
  EXPECT_LE(rep.find("grad_F.dx")->max_rel_error, 1e-9);
}

TEST(GradientCheck, NonFiniteIsReportedNotThrown) {
  ProblemFunctions fns = make_example1().problem.functions();
  fns.F = [](const Vector&, const Vector& y) { return std::log(y[0]); };
  fns.grad_F = [](const Vector&, const Vector& y) { return PartialGradient{v1(0.0), v1(1.0 / y[0])}; };
  const BilevelProblem p("logF", ProblemDims{1, 1, 2, 2}, fns);
  GradientCheckReport rep;
  EXPECT_NO_THROW(rep = check_gradients_fd(p, triple(0.5, 0.0, 1.0, 0.5)));
  EXPECT_FALSE(rep.all_finite());
}

TEST(BilevelProblem, LagrangianGradientOfExample2AtItsOptimum) {
  EXPECT_NEAR(lagrangian_grad(make_example2().problem, triple(-1.0, 1.0, 0.0, 1.0))[0], 0.0, 1e-15);
}

TEST(BilevelProblem, ConstantLagrangianJacobiansOfExample1) {
  const auto& p = make_example1().problem;
  for (const auto& pt : {triple(0.1, 0.9, 3.0, 0.0), triple(0.7, 0.2, 0.0, 5.0)}) {
    const auto J = lagrangian_jacobians(p, pt);
    EXPECT_DOUBLE_EQ(J.dx(0, 0), 1.0);
    EXPECT_DOUBLE_EQ(J.dy(0, 0), 0.0);
    EXPECT_DOUBLE_EQ(J.du(0, 0), -1.0);
    EXPECT_DOUBLE_EQ(J.du(0, 1), 1.0);
  }
}

TEST(BilevelProblem, FallbackLagrangianJacobiansMatchOnExample2) {
  const auto& p = make_example2().problem;
  const auto nh = p.without_hessians();
  const auto pt = triple(-0.4, 0.6, 0.3, 0.7);
  const auto a = lagrangian_jacobians(p, pt), n = lagrangian_jacobians(nh, pt);
  EXPECT_LE((a.dx - n.dx).cwiseAbs().maxCoeff(), 1e-5);
  EXPECT_LE((a.dy - n.dy).cwiseAbs().maxCoeff(), 1e-5);
}

TEST(BilevelProblem, ConstantProblemHasZeroGradientErrors) {
  ProblemFunctions fns;
  fns.F = [](const Vector&, const Vector&) { return 2.0; };
  fns.f = [](const Vector&, const Vector&) { return -1.0; };
  fns.grad_F = [](const Vector&, const Vector&) { return PartialGradient{v1(0.0), v1(0.0)}; };
  fns.grad_f = fns.grad_F;
  fns.g = [](const Vector&, const Vector&) { return v1(-1.0); };
  fns.jac_g = [](const Vector&, const Vector&) { return PartialJacobian{Matrix::Zero(1, 1), Matrix::Zero(1, 1)}; };
  const BilevelProblem p("const", ProblemDims{1, 1, 0, 1}, fns);
  const auto rep = check_gradients_fd(p, TriplePoint{v1(0.2), v1(0.3), v1(0.4)});
  EXPECT_EQ(rep.max_error(), 0.0);
}

class LagrangianProperties : public ::testing::TestWithParam<std::string> {};

TEST_P(LagrangianProperties, ZeroMultipliersGiveGradF) {
  const auto b = make_benchmark(GetParam());
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  for (int k = 0; k < 20; ++k) {
    Vector x(b.problem.n()), y(b.problem.m());
    for (auto& v : x) v = unit(rng);
    for (auto& v : y) v = unit(rng);
    const TriplePoint pt{x, y, Vector::Zero(b.problem.q())};
    EXPECT_EQ(lagrangian_grad(b.problem, pt), b.problem.grad_f(x, y).dy);
  }
}

TEST_P(LagrangianProperties, LinearInMultipliers) {
  const auto b = make_benchmark(GetParam());
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> unit(0.0, 2.0);
  for (int k = 0; k < 20; ++k) {
    Vector x(b.problem.n()), y(b.problem.m()), u1(b.problem.q()), u2(b.problem.q());
    for (auto& v : x) v = unit(rng) - 1.0;
    for (auto& v : y) v = unit(rng) - 1.0;
    for (auto& v : u1) v = unit(rng);
    for (auto& v : u2) v = unit(rng);
    const Vector lhs = lagrangian_grad(b.problem, TriplePoint{x, y, u1 + u2});
    const Vector rhs = lagrangian_grad(b.problem, TriplePoint{x, y, u1}) + lagrangian_grad(b.problem, TriplePoint{x, y, u2}) -
                       b.problem.grad_f(x, y).dy;
    EXPECT_LE((lhs - rhs).cwiseAbs().maxCoeff(), 1e-14);
  }
}

TEST_P(LagrangianProperties, DirectionalDifferencesMatchJacobians) {
  const auto b = make_benchmark(GetParam());
  std::mt19937_64 rng(13);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  const double h = 1e-5;
  for (int k = 0; k < 10; ++k) {
    Vector x(b.problem.n()), y(b.problem.m()), u(b.problem.q()), dx(b.problem.n()), dy(b.problem.m());
    for (auto& v : x) v = unit(rng);
    for (auto& v : y) v = unit(rng);
    for (auto& v : u) v = 1.0 + unit(rng);
    for (auto& v : dx) v = unit(rng);
    for (auto& v : dy) v = unit(rng);
    const auto J = lagrangian_jacobians(b.problem, TriplePoint{x, y, u});
    const Vector fdx = (lagrangian_grad(b.problem, {x + h * dx, y, u}) - lagrangian_grad(b.problem, {x - h * dx, y, u})) / (2 * h);
    const Vector fdy = (lagrangian_grad(b.problem, {x, y + h * dy, u}) - lagrangian_grad(b.problem, {x, y - h * dy, u})) / (2 * h);
    EXPECT_LE((fdx - J.dx * dx).cwiseAbs().maxCoeff(), 1e-7);
    EXPECT_LE((fdy - J.dy * dy).cwiseAbs().maxCoeff(), 1e-7);
  }
}

INSTANTIATE_TEST_SUITE_P(BuiltIn, LagrangianProperties, ::testing::ValuesIn(benchmark_names()));
