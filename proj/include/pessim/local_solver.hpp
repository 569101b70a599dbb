#pragma once

// Local maximization of F(x, .) over the relaxed KKT set D^t(x) for fixed
// (x, t): augmented Lagrangian sweeps around a projected BFGS minimizer
// (u >= 0 is kept by projection), followed by a Gauss-Newton feasibility
// polish so accepted points satisfy the constraints to working precision.

#include "pessim/problem.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>

namespace pessim {

struct LocalSolveOptions {
  int sweeps = 5;
  double penalty0 = 10.0;
  double penalty_growth = 10.0;
  int max_iters = 300;  // BFGS iterations per sweep
  double opt_tol = 1e-9;
  int polish_iters = 40;
};

/// Constraint data of the inner problem in the stacked variable z = (y, u):
///   c(z) = L(x, y, u) = 0,   d(z) = (g(x, y), -u o g(x, y) - t) <= 0,   u >= 0.
class RelaxedInnerProblem {
 public:
  struct Eval {
    double F = 0.0;
    Vector grad_F;  // w.r.t. z
    Vector c;
    Matrix Jc;
    Vector d;
    Matrix Jd;
    bool finite = true;
  };

  RelaxedInnerProblem(const BilevelProblem& problem, Vector x, double t)
      : problem_(problem), x_(std::move(x)), t_(t), m_(static_cast<Eigen::Index>(problem.m())),
        q_(static_cast<Eigen::Index>(problem.q())) {}

  Eigen::Index dim() const { return m_ + q_; }
  Eigen::Index m() const { return m_; }
  Eigen::Index q() const { return q_; }
  double t() const { return t_; }
  const Vector& x() const { return x_; }

  Eval evaluate(const Vector& z) const {
    Eval e;
    const Vector y = z.head(m_);
    const Vector u = z.tail(q_);
    const Eigen::Index nz = dim();
    e.F = problem_.F(x_, y);
    e.grad_F = Vector::Zero(nz);
    e.grad_F.head(m_) = problem_.grad_F(x_, y).dy;

    e.c = problem_.grad_f(x_, y).dy;
    e.Jc = Matrix::Zero(m_, nz);
    e.Jc.leftCols(m_) = problem_.hess_f_yy(x_, y);
    e.d = Vector::Zero(2 * q_);
    e.Jd = Matrix::Zero(2 * q_, nz);
    if (q_ > 0) {
      const Vector g = problem_.g(x_, y);
      const Matrix Jy = problem_.jac_g(x_, y).dy;
      const auto Hyy = problem_.hess_g_yy(x_, y);
      e.c.noalias() += Jy.transpose() * u;
      for (Eigen::Index i = 0; i < q_; ++i) e.Jc.leftCols(m_) += u[i] * Hyy[static_cast<std::size_t>(i)];
      e.Jc.rightCols(q_) = Jy.transpose();
      for (Eigen::Index i = 0; i < q_; ++i) {
        e.d[i] = g[i];
        e.Jd.row(i).head(m_) = Jy.row(i);
        e.d[q_ + i] = -u[i] * g[i] - t_;
        e.Jd.row(q_ + i).head(m_) = -u[i] * Jy.row(i);
        e.Jd(q_ + i, m_ + i) = -g[i];
      }
    }
    e.finite = std::isfinite(e.F) && e.grad_F.allFinite() && e.c.allFinite() && e.Jc.allFinite() &&
               e.d.allFinite() && e.Jd.allFinite();
    return e;
  }

  /// max(|c|_inf, max(d, 0), max(-u, 0)).
  static double violation(const Eval& e, const Vector& z, Eigen::Index m) {
    double v = e.c.size() ? e.c.cwiseAbs().maxCoeff() : 0.0;
    if (e.d.size()) v = std::max(v, e.d.maxCoeff());
    if (z.size() > m) v = std::max(v, (-z.tail(z.size() - m)).maxCoeff());
    return std::max(v, 0.0);
  }

  Vector project(Vector z) const {
    z.tail(q_) = z.tail(q_).cwiseMax(0.0);
    return z;
  }

 private:
  const BilevelProblem& problem_;
  Vector x_;
  double t_;
  Eigen::Index m_;
  Eigen::Index q_;
};

struct LocalSolution {
  Vector z;
  double F = -INFINITY;
  double violation = INFINITY;
  bool feasible = false;   // polished to the requested tolerance
  bool converged = false;  // last sweep reached the projected-gradient tolerance
  std::size_t evals = 0;
};

namespace detail {

// Augmented Lagrangian value and gradient for minimizing -F.
struct AlState {
  Vector lambda;  // equality multipliers
  Vector mu;      // inequality multipliers
  double rho = 10.0;
};

inline double al_value(const RelaxedInnerProblem::Eval& e, const AlState& s, Vector* grad) {
  const Vector shifted = (s.mu + s.rho * e.d).cwiseMax(0.0);
  const double val = -e.F + s.lambda.dot(e.c) + 0.5 * s.rho * e.c.squaredNorm() +
                     (shifted.squaredNorm() - s.mu.squaredNorm()) / (2.0 * s.rho);
  if (grad) {
    *grad = -e.grad_F;
    grad->noalias() += e.Jc.transpose() * (s.lambda + s.rho * e.c);
    grad->noalias() += e.Jd.transpose() * shifted;
  }
  return val;
}

}  // namespace detail

/// Gauss-Newton restoration onto D^t(x): repeatedly takes the minimum-norm step
/// zeroing the equality residuals and every currently violated inequality.
inline bool polish_feasibility(const RelaxedInnerProblem& inner, Vector& z, int max_iters, double target,
                               std::size_t* evals = nullptr) {
  const Eigen::Index m = inner.m(), q = inner.q(), nz = inner.dim();
  for (int it = 0; it <= max_iters; ++it) {
    const auto e = inner.evaluate(z);
    if (evals) ++*evals;
    if (!e.finite) return false;
    if (RelaxedInnerProblem::violation(e, z, m) <= target) return true;
    if (it == max_iters) break;
    std::vector<Eigen::Index> rows_d, rows_u;
    for (Eigen::Index j = 0; j < e.d.size(); ++j)
      if (e.d[j] > 0.0) rows_d.push_back(j);
    for (Eigen::Index i = 0; i < q; ++i)
      if (z[m + i] < 0.0) rows_u.push_back(i);
    const Eigen::Index nr = m + static_cast<Eigen::Index>(rows_d.size() + rows_u.size());
    Matrix J(nr, nz);
    Vector r(nr);
    J.topRows(m) = e.Jc;
    r.head(m) = e.c;
    Eigen::Index k = m;
    for (const auto j : rows_d) {
      J.row(k) = e.Jd.row(j);
      r[k++] = e.d[j];
    }
    for (const auto i : rows_u) {
      J.row(k).setZero();
      J(k, m + i) = -1.0;
      r[k++] = -z[m + i];
    }
    const Vector step = J.completeOrthogonalDecomposition().solve(r);
    if (!step.allFinite()) return false;
    z -= step;
  }
  return false;
}

/// One local maximization of F(x, .) over D^t(x) from z0.
inline LocalSolution solve_local(const RelaxedInnerProblem& inner, const Vector& z0, const LocalSolveOptions& opt,
                                 double feas_tol) {
  LocalSolution out;
  const Eigen::Index nz = inner.dim();
  const Eigen::Index m = inner.m();
  detail::AlState st;
  st.lambda = Vector::Zero(m);
  st.mu = Vector::Zero(2 * inner.q());
  st.rho = opt.penalty0;

  Vector z = inner.project(z0);
  bool last_converged = false;

  for (int sweep = 0; sweep < opt.sweeps; ++sweep) {
    // Projected BFGS on the augmented Lagrangian.
    auto e = inner.evaluate(z);
    ++out.evals;
    if (!e.finite) return out;
    Vector grad;
    double phi = detail::al_value(e, st, &grad);
    Matrix H = Matrix::Identity(nz, nz);
    bool fresh = true;
    last_converged = false;
    // Early sweeps are solved loosely; the polish restores feasibility anyway.
    const double sweep_tol = std::max(opt.opt_tol, std::pow(10.0, -2.0 - sweep));
    for (int it = 0; it < opt.max_iters; ++it) {
      const Vector pg = inner.project(z - grad) - z;
      const double pg_norm = pg.cwiseAbs().maxCoeff();
      if (pg_norm <= sweep_tol) {
        last_converged = true;
        break;
      }
      // Bound coordinates within eps of u = 0 and pushed outward go straight to
      // the bound; the quasi-Newton step acts on the rest.
      const double eps = std::min(1e-3, pg_norm);
      std::vector<Eigen::Index> free_idx;
      Vector dir = Vector::Zero(nz);
      for (Eigen::Index i = 0; i < nz; ++i) {
        if (i >= m && z[i] <= eps && grad[i] > 0.0)
          dir[i] = -z[i];
        else
          free_idx.push_back(i);
      }
      Vector step_free = Vector::Zero(nz);
      for (const auto i : free_idx) {
        double acc = 0.0;
        for (const auto j : free_idx) acc -= H(i, j) * grad[j];
        step_free[i] = acc;
      }
      if (grad.dot(step_free) >= 0.0) {
        H.setIdentity();
        fresh = true;
        step_free.setZero();
        for (const auto i : free_idx) step_free[i] = -grad[i];
      }
      dir += step_free;
      double step = 1.0;
      bool accepted = false;
      Vector z_new;
      RelaxedInnerProblem::Eval e_new;
      double phi_new = 0.0;
      for (int ls = 0; ls < 50; ++ls) {
        z_new = inner.project(z + step * dir);
        e_new = inner.evaluate(z_new);
        ++out.evals;
        if (e_new.finite) {
          phi_new = detail::al_value(e_new, st, nullptr);
          if (phi_new <= phi + 1e-4 * grad.dot(z_new - z)) {
            accepted = true;
            break;
          }
        }
        step *= 0.5;
      }
      if (!accepted) {
        if (fresh) break;
        H.setIdentity();
        fresh = true;
        continue;
      }
      Vector grad_new;
      phi_new = detail::al_value(e_new, st, &grad_new);
      Vector s = z_new - z;
      Vector yv = grad_new - grad;
      for (Eigen::Index i = m; i < nz; ++i)
        if (dir[i] == -z[i] && step_free[i] == 0.0) s[i] = yv[i] = 0.0;
      const double sy = s.dot(yv);
      if (sy > 1e-12 * s.norm() * yv.norm()) {
        if (fresh) H *= sy / yv.squaredNorm();
        const double r = 1.0 / sy;
        const Matrix V = Matrix::Identity(nz, nz) - r * yv * s.transpose();
        H = V.transpose() * H * V + r * s * s.transpose();
        fresh = false;
      }
      z = z_new;
      e = e_new;
      phi = phi_new;
      grad = grad_new;
    }
    // Multiplier update, then tighten the penalty.
    st.lambda += st.rho * e.c;
    st.mu = (st.mu + st.rho * e.d).cwiseMax(0.0);
    st.rho *= opt.penalty_growth;
  }

  out.converged = last_converged;
  out.feasible = polish_feasibility(inner, z, opt.polish_iters, 1e-3 * feas_tol, &out.evals);
  const auto e = inner.evaluate(z);
  ++out.evals;
  out.z = z;
  out.F = e.finite ? e.F : -INFINITY;
  out.violation = e.finite ? RelaxedInnerProblem::violation(e, z, m) : INFINITY;
  out.feasible = out.feasible && out.violation <= feas_tol;
  return out;
}

}  // namespace pessim
