#pragma once

// Smooth pessimistic bilevel program: evaluators for F, f, G, g and the
// derivatives the relaxation, stationarity and qualification machinery need.

#include "pessim/types.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace pessim {

/// Gradient of a scalar h(x, y) split into its x and y parts.
struct PartialGradient {
  Vector dx;
  Vector dy;
};

/// Jacobian of a vector map g(x, y) split into its x and y blocks (rows = components).
struct PartialJacobian {
  Matrix dx;
  Matrix dy;
};

/// Central finite-difference step used when second derivatives are not supplied.
inline constexpr double kFallbackStep = 1e-6;

struct ProblemFunctions {
  using Scalar2 = std::function<double(const Vector&, const Vector&)>;
  using Vector1 = std::function<Vector(const Vector&)>;
  using Vector2 = std::function<Vector(const Vector&, const Vector&)>;
  using Gradient2 = std::function<PartialGradient(const Vector&, const Vector&)>;
  using Jacobian1 = std::function<Matrix(const Vector&)>;
  using Jacobian2 = std::function<PartialJacobian(const Vector&, const Vector&)>;
  using Matrix2 = std::function<Matrix(const Vector&, const Vector&)>;
  using MatrixList2 = std::function<std::vector<Matrix>(const Vector&, const Vector&)>;

  Scalar2 F;
  Scalar2 f;
  Vector1 G;
  Vector2 g;
  Gradient2 grad_F;
  Gradient2 grad_f;
  Jacobian1 jac_G;
  Jacobian2 jac_g;

  // Optional; when empty, central differences of grad_f / jac_g are used.
  Matrix2 hess_f_yx;
  Matrix2 hess_f_yy;
  MatrixList2 hess_g_yx;
  MatrixList2 hess_g_yy;
};

/// Evaluator bundle for min_{x in X} max_{y in S(x)} F(x, y) with
/// X = {G(x) <= 0} and S(x) = argmin {f(x, y) : g(x, y) <= 0}.
///
/// Evaluators must be pure. Points outside a function's mathematical domain
/// should produce non-finite values; callers treat those as infeasible.
class BilevelProblem {
 public:
  BilevelProblem(std::string name, ProblemDims dims, ProblemFunctions fns)
      : name_(std::move(name)), dims_(dims), fns_(std::move(fns)) {
    dims_.validate();
    if (!fns_.F || !fns_.f || !fns_.grad_F || !fns_.grad_f)
      throw UsageError("BilevelProblem: F, f and their gradients are required");
    if (dims_.p > 0 && (!fns_.G || !fns_.jac_G))
      throw UsageError("BilevelProblem: G and jac_G are required when p > 0");
    if (dims_.q > 0 && (!fns_.g || !fns_.jac_g))
      throw UsageError("BilevelProblem: g and jac_g are required when q > 0");
  }

  const std::string& name() const { return name_; }
  const ProblemDims& dims() const { return dims_; }
  std::size_t n() const { return dims_.n; }
  std::size_t m() const { return dims_.m; }
  std::size_t p() const { return dims_.p; }
  std::size_t q() const { return dims_.q; }

  /// Box used to project leader iterates; empty when X is not box-shaped.
  const Box& leader_box() const { return leader_box_; }
  BilevelProblem& set_leader_box(Box b) {
    check_size(b.lower, dims_.n, "leader box");
    leader_box_ = std::move(b);
    return *this;
  }
  /// Box from which follower multistart points are drawn; empty = default.
  const Box& follower_box() const { return follower_box_; }
  BilevelProblem& set_follower_box(Box b) {
    check_size(b.lower, dims_.m, "follower box");
    follower_box_ = std::move(b);
    return *this;
  }

  bool hessians_are_fallback() const {
    return !fns_.hess_f_yx || !fns_.hess_f_yy || (dims_.q > 0 && (!fns_.hess_g_yx || !fns_.hess_g_yy));
  }
  /// Copy of this problem with analytic second derivatives dropped, forcing the fallback.
  BilevelProblem without_hessians() const {
    BilevelProblem copy = *this;
    copy.fns_.hess_f_yx = nullptr;
    copy.fns_.hess_f_yy = nullptr;
    copy.fns_.hess_g_yx = nullptr;
    copy.fns_.hess_g_yy = nullptr;
    return copy;
  }
  const ProblemFunctions& functions() const { return fns_; }

  double F(const Vector& x, const Vector& y) const { return fns_.F(x, y); }
  double f(const Vector& x, const Vector& y) const { return fns_.f(x, y); }
  Vector G(const Vector& x) const { return dims_.p ? fns_.G(x) : Vector(0); }
  Vector g(const Vector& x, const Vector& y) const { return dims_.q ? fns_.g(x, y) : Vector(0); }
  PartialGradient grad_F(const Vector& x, const Vector& y) const { return fns_.grad_F(x, y); }
  PartialGradient grad_f(const Vector& x, const Vector& y) const { return fns_.grad_f(x, y); }
  Matrix jac_G(const Vector& x) const { return dims_.p ? fns_.jac_G(x) : Matrix(0, ix(dims_.n)); }
  PartialJacobian jac_g(const Vector& x, const Vector& y) const {
    if (!dims_.q) return {Matrix(0, ix(dims_.n)), Matrix(0, ix(dims_.m))};
    return fns_.jac_g(x, y);
  }

  Matrix hess_f_yx(const Vector& x, const Vector& y) const {
    if (fns_.hess_f_yx) return fns_.hess_f_yx(x, y);
    return fd_columns(x, [&](const Vector& xs) { return fns_.grad_f(xs, y).dy; });
  }
  Matrix hess_f_yy(const Vector& x, const Vector& y) const {
    if (fns_.hess_f_yy) return fns_.hess_f_yy(x, y);
    return fd_columns(y, [&](const Vector& ys) { return fns_.grad_f(x, ys).dy; });
  }
  /// One m x n matrix per lower-level constraint: d/dx of grad_y g_i.
  std::vector<Matrix> hess_g_yx(const Vector& x, const Vector& y) const {
    if (!dims_.q) return {};
    if (fns_.hess_g_yx) return fns_.hess_g_yx(x, y);
    return fd_constraint_hessians(x, [&](const Vector& xs) { return fns_.jac_g(xs, y).dy; });
  }
  /// One m x m matrix per lower-level constraint: d/dy of grad_y g_i.
  std::vector<Matrix> hess_g_yy(const Vector& x, const Vector& y) const {
    if (!dims_.q) return {};
    if (fns_.hess_g_yy) return fns_.hess_g_yy(x, y);
    return fd_constraint_hessians(y, [&](const Vector& ys) { return fns_.jac_g(x, ys).dy; });
  }

  void check_point(const TriplePoint& pt) const {
    check_size(pt.x, dims_.n, "x");
    check_size(pt.y, dims_.m, "y");
    check_size(pt.u, dims_.q, "u");
  }
  void check_leader(const Vector& x) const { check_size(x, dims_.n, "x"); }

  /// max(0, max_i G_i(x)); 0 when p = 0.
  double leader_violation(const Vector& x) const {
    if (!dims_.p) return 0.0;
    return std::max(0.0, G(x).maxCoeff());
  }

 private:
  static Eigen::Index ix(std::size_t s) { return static_cast<Eigen::Index>(s); }

  static void check_size(const Vector& v, std::size_t expected, const char* what) {
    if (static_cast<std::size_t>(v.size()) != expected)
      throw UsageError(std::string("dimension mismatch for ") + what + ": got " + std::to_string(v.size()) +
                       ", expected " + std::to_string(expected));
  }

  // Column j holds d vecfn / d v_j by central differences.
  template <class Fn>
  static Matrix fd_columns(const Vector& v, Fn&& vecfn) {
    const Vector base = vecfn(v);
    Matrix out(base.size(), v.size());
    for (Eigen::Index j = 0; j < v.size(); ++j) {
      Vector vp = v, vm = v;
      vp[j] += kFallbackStep;
      vm[j] -= kFallbackStep;
      out.col(j) = (vecfn(vp) - vecfn(vm)) / (2.0 * kFallbackStep);
    }
    return out;
  }

  template <class Fn>
  std::vector<Matrix> fd_constraint_hessians(const Vector& v, Fn&& jacfn) const {
    std::vector<Matrix> out(dims_.q, Matrix::Zero(ix(dims_.m), v.size()));
    for (Eigen::Index j = 0; j < v.size(); ++j) {
      Vector vp = v, vm = v;
      vp[j] += kFallbackStep;
      vm[j] -= kFallbackStep;
      const Matrix d = (jacfn(vp) - jacfn(vm)) / (2.0 * kFallbackStep);
      for (std::size_t i = 0; i < dims_.q; ++i) out[i].col(j) = d.row(ix(i)).transpose();
    }
    return out;
  }

  std::string name_;
  ProblemDims dims_;
  ProblemFunctions fns_;
  Box leader_box_;
  Box follower_box_;
};

/// grad_y of the lower-level Lagrangian f + u^T g.
inline Vector lagrangian_grad(const BilevelProblem& problem, const TriplePoint& pt) {
  problem.check_point(pt);
  Vector out = problem.grad_f(pt.x, pt.y).dy;
  if (problem.q()) out.noalias() += problem.jac_g(pt.x, pt.y).dy.transpose() * pt.u;
  return out;
}

struct LagrangianJacobians {
  Matrix dx;  // m x n
  Matrix dy;  // m x m
  Matrix du;  // m x q
};

inline LagrangianJacobians lagrangian_jacobians(const BilevelProblem& problem, const TriplePoint& pt) {
  problem.check_point(pt);
  LagrangianJacobians J{problem.hess_f_yx(pt.x, pt.y), problem.hess_f_yy(pt.x, pt.y), Matrix()};
  if (problem.q()) {
    const auto hyx = problem.hess_g_yx(pt.x, pt.y);
    const auto hyy = problem.hess_g_yy(pt.x, pt.y);
    for (std::size_t i = 0; i < problem.q(); ++i) {
      const double ui = pt.u[static_cast<Eigen::Index>(i)];
      J.dx += ui * hyx[i];
      J.dy += ui * hyy[i];
    }
    J.du = problem.jac_g(pt.x, pt.y).dy.transpose();
  } else {
    J.du = Matrix(static_cast<Eigen::Index>(problem.m()), 0);
  }
  return J;
}

// ---------------------------------------------------------------------------
// Finite-difference derivative checking

struct ProviderError {
  std::string provider;
  double max_rel_error = 0.0;
  bool finite = true;
};

struct GradientCheckReport {
  std::vector<ProviderError> providers;

  double max_error() const {
    double e = 0.0;
    for (const auto& p : providers) e = std::max(e, p.finite ? p.max_rel_error : INFINITY);
    return e;
  }
  bool all_finite() const {
    return std::all_of(providers.begin(), providers.end(), [](const auto& p) { return p.finite; });
  }
  const ProviderError* find(const std::string& name) const {
    for (const auto& p : providers)
      if (p.provider == name) return &p;
    return nullptr;
  }
};

namespace detail {

// |a - b| / max(1, |b|), entrywise max; non-finite inputs are reported, not thrown.
inline void accumulate_error(ProviderError& pe, const Matrix& analytic, const Matrix& numeric) {
  if (analytic.rows() != numeric.rows() || analytic.cols() != numeric.cols()) {
    pe.finite = false;
    return;
  }
  for (Eigen::Index i = 0; i < analytic.size(); ++i) {
    const double a = analytic.data()[i], b = numeric.data()[i];
    if (!std::isfinite(a) || !std::isfinite(b)) {
      pe.finite = false;
      continue;
    }
    pe.max_rel_error = std::max(pe.max_rel_error, std::abs(a - b) / std::max(1.0, std::abs(b)));
  }
}

template <class Fn>
Matrix central_jacobian(const Vector& v, double h, Fn&& fn) {
  const Matrix base = fn(v);
  Matrix out(base.size(), v.size());
  for (Eigen::Index j = 0; j < v.size(); ++j) {
    Vector vp = v, vm = v;
    vp[j] += h;
    vm[j] -= h;
    const Matrix d = (fn(vp) - fn(vm)) / (2.0 * h);
    out.col(j) = Eigen::Map<const Vector>(d.data(), d.size());
  }
  return out;
}

inline Vector as_vector(double s) { return Vector::Constant(1, s); }

// Row block i holds mats[i].
inline Matrix stack_rows(const std::vector<Matrix>& mats) {
  if (mats.empty()) return Matrix(0, 0);
  Matrix out(static_cast<Eigen::Index>(mats.size()) * mats[0].rows(), mats[0].cols());
  for (std::size_t i = 0; i < mats.size(); ++i)
    out.block(static_cast<Eigen::Index>(i) * mats[0].rows(), 0, mats[0].rows(), mats[0].cols()) = mats[i];
  return out;
}

}  // namespace detail

/// Compares every derivative provider against central differences at pt.
inline GradientCheckReport check_gradients_fd(const BilevelProblem& problem, const TriplePoint& pt, double h = 1e-6) {
  if (!(h > 0.0)) throw UsageError("check_gradients_fd: step must be positive");
  problem.check_point(pt);
  using detail::accumulate_error;
  using detail::as_vector;
  using detail::central_jacobian;
  const Vector& x = pt.x;
  const Vector& y = pt.y;
  GradientCheckReport rep;

  auto add = [&](const std::string& name, auto&& analytic, auto&& numeric) {
    ProviderError pe{name};
    accumulate_error(pe, analytic(), numeric());
    rep.providers.push_back(pe);
  };

  auto transpose_row = [](const Vector& v) -> Matrix { return v.transpose(); };

  add("grad_F.dx", [&] { return transpose_row(problem.grad_F(x, y).dx); },
      [&] { return central_jacobian(x, h, [&](const Vector& xs) { return as_vector(problem.F(xs, y)); }); });
  add("grad_F.dy", [&] { return transpose_row(problem.grad_F(x, y).dy); },
      [&] { return central_jacobian(y, h, [&](const Vector& ys) { return as_vector(problem.F(x, ys)); }); });
  add("grad_f.dx", [&] { return transpose_row(problem.grad_f(x, y).dx); },
      [&] { return central_jacobian(x, h, [&](const Vector& xs) { return as_vector(problem.f(xs, y)); }); });
  add("grad_f.dy", [&] { return transpose_row(problem.grad_f(x, y).dy); },
      [&] { return central_jacobian(y, h, [&](const Vector& ys) { return as_vector(problem.f(x, ys)); }); });
  if (problem.p()) {
    add("jac_G", [&] { return problem.jac_G(x); },
        [&] { return central_jacobian(x, h, [&](const Vector& xs) { return problem.G(xs); }); });
  }
  if (problem.q()) {
    add("jac_g.dx", [&] { return problem.jac_g(x, y).dx; },
        [&] { return central_jacobian(x, h, [&](const Vector& xs) { return problem.g(xs, y); }); });
    add("jac_g.dy", [&] { return problem.jac_g(x, y).dy; },
        [&] { return central_jacobian(y, h, [&](const Vector& ys) { return problem.g(x, ys); }); });
  }
  add("hess_f_yx", [&] { return problem.hess_f_yx(x, y); },
      [&] { return central_jacobian(x, h, [&](const Vector& xs) { return Matrix(problem.grad_f(xs, y).dy); }); });
  add("hess_f_yy", [&] { return problem.hess_f_yy(x, y); },
      [&] { return central_jacobian(y, h, [&](const Vector& ys) { return Matrix(problem.grad_f(x, ys).dy); }); });
  if (problem.q()) {
    // Row i of jac_g.dy differentiated w.r.t. x (resp. y), stacked over i.
    auto row_stack = [&](const Vector& xs, const Vector& ys) {
      const Matrix J = problem.jac_g(xs, ys).dy;  // q x m
      Vector out(J.size());
      for (Eigen::Index i = 0; i < J.rows(); ++i) out.segment(i * J.cols(), J.cols()) = J.row(i).transpose();
      return out;
    };
    add("hess_g_yx", [&] { return detail::stack_rows(problem.hess_g_yx(x, y)); },
        [&] { return central_jacobian(x, h, [&](const Vector& xs) { return row_stack(xs, y); }); });
    add("hess_g_yy", [&] { return detail::stack_rows(problem.hess_g_yy(x, y)); },
        [&] { return central_jacobian(y, h, [&](const Vector& ys) { return row_stack(x, ys); }); });
  }
  return rep;
}

}  // namespace pessim
