#pragma once

// Dense two-phase tableau simplex for the desk-scale linear programs used by
// the multiplier recovery and qualification checks. Bland's rule throughout,
// so results are reproducible bit for bit.

#include "pessim/types.hpp"

#include <cmath>
#include <limits>
#include <vector>

namespace pessim {

/// minimize c^T x  s.t.  A_eq x = b_eq,  A_ub x <= b_ub,  lower <= x <= upper.
/// Defaults are x >= 0 with no upper bound; infinite bounds are allowed.
struct LinearProgram {
  Vector c;
  Matrix A_eq;
  Vector b_eq;
  Matrix A_ub;
  Vector b_ub;
  Vector lower;
  Vector upper;

  explicit LinearProgram(Eigen::Index nvars = 0)
      : c(Vector::Zero(nvars)),
        A_eq(0, nvars),
        b_eq(0),
        A_ub(0, nvars),
        b_ub(0),
        lower(Vector::Zero(nvars)),
        upper(Vector::Constant(nvars, std::numeric_limits<double>::infinity())) {}

  Eigen::Index nvars() const { return c.size(); }

  void add_eq(const Vector& row, double rhs) { append(A_eq, b_eq, row, rhs); }
  void add_ub(const Vector& row, double rhs) { append(A_ub, b_ub, row, rhs); }

 private:
  static void append(Matrix& A, Vector& b, const Vector& row, double rhs) {
    A.conservativeResize(A.rows() + 1, row.size());
    A.row(A.rows() - 1) = row.transpose();
    b.conservativeResize(b.size() + 1);
    b[b.size() - 1] = rhs;
  }
};

enum class LpStatus { optimal, infeasible, unbounded, iteration_limit };

struct LpResult {
  LpStatus status = LpStatus::infeasible;
  Vector x;
  double objective = std::numeric_limits<double>::quiet_NaN();
};

namespace detail {

class Tableau {
 public:
  // Rows [0, rows) are constraints, row `rows` is the objective. Last column is the RHS.
  Tableau(const Matrix& A, const Vector& b) : rows_(A.rows()), cols_(A.cols()), T_(Matrix::Zero(rows_ + 1, cols_ + 1)) {
    T_.topLeftCorner(rows_, cols_) = A;
    T_.topRightCorner(rows_, 1) = b;
  }

  Matrix& T() { return T_; }
  Eigen::Index rows() const { return rows_; }
  Eigen::Index cols() const { return cols_; }
  std::vector<Eigen::Index>& basis() { return basis_; }

  void pivot(Eigen::Index r, Eigen::Index c) {
    const double pv = T_(r, c);
    T_.row(r) /= pv;
    for (Eigen::Index i = 0; i <= rows_; ++i) {
      if (i == r) continue;
      const double f = T_(i, c);
      if (f != 0.0) T_.row(i) -= f * T_.row(r);
    }
    T_(r, c) = 1.0;
    basis_[static_cast<std::size_t>(r)] = c;
  }

  // Runs Bland's-rule simplex on the objective row over columns < active_cols.
  LpStatus run(Eigen::Index active_cols, double tol, int max_iters) {
    for (int it = 0; it < max_iters; ++it) {
      Eigen::Index enter = -1;
      for (Eigen::Index j = 0; j < active_cols; ++j)
        if (T_(rows_, j) < -tol) {
          enter = j;
          break;
        }
      if (enter < 0) return LpStatus::optimal;
      Eigen::Index leave = -1;
      double best = std::numeric_limits<double>::infinity();
      for (Eigen::Index i = 0; i < rows_; ++i) {
        const double a = T_(i, enter);
        if (a > tol) {
          const double ratio = T_(i, cols_) / a;
          if (ratio < best - 1e-14 ||
              (std::abs(ratio - best) <= 1e-14 && leave >= 0 &&
               basis_[static_cast<std::size_t>(i)] < basis_[static_cast<std::size_t>(leave)])) {
            best = ratio;
            leave = i;
          }
        }
      }
      if (leave < 0) return LpStatus::unbounded;
      pivot(leave, enter);
    }
    return LpStatus::iteration_limit;
  }

 private:
  Eigen::Index rows_;
  Eigen::Index cols_;
  Matrix T_;
  std::vector<Eigen::Index> basis_;
};

}  // namespace detail

inline LpResult solve_lp(const LinearProgram& lp, double tol = 1e-10) {
  const Eigen::Index nv = lp.nvars();
  if (lp.A_eq.cols() != nv || lp.A_ub.cols() != nv || lp.lower.size() != nv || lp.upper.size() != nv ||
      lp.A_eq.rows() != lp.b_eq.size() || lp.A_ub.rows() != lp.b_ub.size())
    throw UsageError("solve_lp: inconsistent dimensions");

  // Map x onto nonnegative columns: x_j = offset_j + sum_k coef_jk * s_k.
  struct ColMap {
    Eigen::Index plus = -1, minus = -1;
    double offset = 0.0, sign = 1.0;
  };
  std::vector<ColMap> cmap(static_cast<std::size_t>(nv));
  Eigen::Index ns = 0;
  std::vector<std::pair<Eigen::Index, double>> upper_rows;  // s_k <= value
  for (Eigen::Index j = 0; j < nv; ++j) {
    auto& cm = cmap[static_cast<std::size_t>(j)];
    const double lo = lp.lower[j], hi = lp.upper[j];
    if (lo > hi) return {LpStatus::infeasible, Vector(), NAN};
    if (std::isfinite(lo)) {
      cm.plus = ns++;
      cm.offset = lo;
      if (std::isfinite(hi)) upper_rows.emplace_back(cm.plus, hi - lo);
    } else if (std::isfinite(hi)) {
      cm.plus = ns++;
      cm.offset = hi;
      cm.sign = -1.0;
    } else {
      cm.plus = ns++;
      cm.minus = ns++;
    }
  }
  auto expand_row = [&](const Eigen::Ref<const Vector>& row, double& rhs) {
    Vector out = Vector::Zero(ns);
    for (Eigen::Index j = 0; j < nv; ++j) {
      const auto& cm = cmap[static_cast<std::size_t>(j)];
      out[cm.plus] += cm.sign * row[j];
      if (cm.minus >= 0) out[cm.minus] -= row[j];
      rhs -= row[j] * cm.offset;
    }
    return out;
  };

  const Eigen::Index n_eq = lp.A_eq.rows();
  const Eigen::Index n_ub = lp.A_ub.rows() + static_cast<Eigen::Index>(upper_rows.size());
  const Eigen::Index rows = n_eq + n_ub;
  const Eigen::Index struct_cols = ns + n_ub;  // structural + slacks
  Matrix A = Matrix::Zero(rows, struct_cols + rows);  // + artificials
  Vector b(rows);
  for (Eigen::Index i = 0; i < n_eq; ++i) {
    double rhs = lp.b_eq[i];
    A.row(i).head(ns) = expand_row(lp.A_eq.row(i).transpose(), rhs).transpose();
    b[i] = rhs;
  }
  for (Eigen::Index i = 0; i < lp.A_ub.rows(); ++i) {
    double rhs = lp.b_ub[i];
    A.row(n_eq + i).head(ns) = expand_row(lp.A_ub.row(i).transpose(), rhs).transpose();
    A(n_eq + i, ns + i) = 1.0;
    b[n_eq + i] = rhs;
  }
  for (std::size_t k = 0; k < upper_rows.size(); ++k) {
    const Eigen::Index r = n_eq + lp.A_ub.rows() + static_cast<Eigen::Index>(k);
    A(r, upper_rows[k].first) = 1.0;
    A(r, ns + lp.A_ub.rows() + static_cast<Eigen::Index>(k)) = 1.0;
    b[r] = upper_rows[k].second;
  }
  for (Eigen::Index i = 0; i < rows; ++i) {
    if (b[i] < 0) {
      A.row(i) = -A.row(i);
      b[i] = -b[i];
    }
    A(i, struct_cols + i) = 1.0;
  }

  Vector cost = Vector::Zero(ns);
  for (Eigen::Index j = 0; j < nv; ++j) {
    const auto& cm = cmap[static_cast<std::size_t>(j)];
    cost[cm.plus] += cm.sign * lp.c[j];
    if (cm.minus >= 0) cost[cm.minus] -= lp.c[j];
  }

  detail::Tableau tab(A, b);
  auto& T = tab.T();
  const Eigen::Index total_cols = struct_cols + rows;
  tab.basis().resize(static_cast<std::size_t>(rows));
  for (Eigen::Index i = 0; i < rows; ++i) tab.basis()[static_cast<std::size_t>(i)] = struct_cols + i;

  const int max_iters = 50 * static_cast<int>(total_cols + rows) + 1000;

  // Phase 1: minimize the sum of artificials.
  T.row(rows).setZero();
  for (Eigen::Index i = 0; i < rows; ++i) T.row(rows) -= T.row(i);
  for (Eigen::Index i = 0; i < rows; ++i) T(rows, struct_cols + i) = 0.0;
  if (tab.run(total_cols, tol, max_iters) == LpStatus::iteration_limit) return {LpStatus::iteration_limit, Vector(), NAN};
  const double scale = std::max(1.0, b.cwiseAbs().maxCoeff());
  if (-T(rows, total_cols) > 1e-9 * scale) return {LpStatus::infeasible, Vector(), NAN};

  // Drive artificials out of the basis where possible; rows that cannot be
  // pivoted are redundant and stay with a zero artificial.
  for (Eigen::Index i = 0; i < rows; ++i) {
    if (tab.basis()[static_cast<std::size_t>(i)] < struct_cols) continue;
    for (Eigen::Index j = 0; j < struct_cols; ++j)
      if (std::abs(T(i, j)) > 1e-9) {
        tab.pivot(i, j);
        break;
      }
  }

  // Phase 2 over structural + slack columns only.
  T.row(rows).setZero();
  T.row(rows).head(ns) = cost.transpose();
  for (Eigen::Index i = 0; i < rows; ++i) {
    const Eigen::Index bj = tab.basis()[static_cast<std::size_t>(i)];
    const double cb = bj < ns ? cost[bj] : 0.0;
    if (cb != 0.0) T.row(rows) -= cb * T.row(i);
  }
  for (Eigen::Index i = 0; i < rows; ++i) T(rows, struct_cols + i) = 0.0;
  const LpStatus st = tab.run(struct_cols, tol, max_iters);
  if (st != LpStatus::optimal) return {st, Vector(), NAN};

  Vector s = Vector::Zero(total_cols);
  for (Eigen::Index i = 0; i < rows; ++i) s[tab.basis()[static_cast<std::size_t>(i)]] = T(i, total_cols);
  LpResult res;
  res.status = LpStatus::optimal;
  res.x.resize(nv);
  for (Eigen::Index j = 0; j < nv; ++j) {
    const auto& cm = cmap[static_cast<std::size_t>(j)];
    double v = cm.offset + cm.sign * s[cm.plus];
    if (cm.minus >= 0) v -= s[cm.minus];
    res.x[j] = v;
  }
  res.objective = lp.c.dot(res.x);
  return res;
}

}  // namespace pessim
