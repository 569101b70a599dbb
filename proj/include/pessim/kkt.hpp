#pragma once

// Membership, residuals and active-set classification for the lower-level
// KKT set D(x) and its Scholtes relaxation D^t(x), plus the Slater and
// upper-level regularity diagnostics.

#include "pessim/linprog.hpp"
#include "pessim/pattern_search.hpp"
#include "pessim/problem.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

namespace pessim {

inline constexpr double kDefaultActiveTol = 1e-6;
inline constexpr double kDefaultFeasTol = 1e-8;

/// Residuals of (y, u) against D^t(x); t = 0 is the unrelaxed set.
struct KktResidual {
  double t = 0.0;
  Vector stationarity;  // L(x, y, u), signed
  Vector dual_viol;     // max(0, -u)
  Vector primal_viol;   // max(0, g)
  double complementarity = 0.0;  // |u^T g|
  Vector relax_viol;             // max(0, -u_i g_i - t)

  static double inf_norm(const Vector& v) { return v.size() ? v.cwiseAbs().maxCoeff() : 0.0; }

  /// Largest violation over the fields that define membership at this t.
  /// The complementarity product only enters when t = 0.
  double max_violation() const {
    double v = std::max({inf_norm(stationarity), inf_norm(dual_viol), inf_norm(primal_viol), inf_norm(relax_viol)});
    if (t == 0.0) v = std::max(v, complementarity);
    return v;
  }
  bool is_member(double tol = kDefaultFeasTol) const { return max_violation() <= tol; }

  /// Name of the first field exceeding tol, empty if none does.
  std::string violated_field(double tol) const {
    if (!std::isfinite(max_violation())) return "non-finite evaluation";
    if (inf_norm(stationarity) > tol) return "stationarity";
    if (inf_norm(dual_viol) > tol) return "dual_viol";
    if (inf_norm(primal_viol) > tol) return "primal_viol";
    if (t == 0.0 && complementarity > tol) return "complementarity";
    if (inf_norm(relax_viol) > tol) return "relax_viol";
    return {};
  }
};

inline KktResidual kkt_residual(const BilevelProblem& problem, const TriplePoint& pt, double t) {
  if (!(t >= 0.0)) throw UsageError("kkt_residual: t must be nonnegative");
  problem.check_point(pt);
  KktResidual r;
  r.t = t;
  r.stationarity = lagrangian_grad(problem, pt);
  const Vector g = problem.g(pt.x, pt.y);
  r.dual_viol = (-pt.u).cwiseMax(0.0);
  r.primal_viol = g.cwiseMax(0.0);
  r.complementarity = std::abs(pt.u.dot(g));
  r.relax_viol = (-(pt.u.cwiseProduct(g)).array() - t).cwiseMax(0.0).matrix();
  return r;
}

using IndexList = std::vector<std::size_t>;

struct IndexSets {
  IndexList eta;    // u_i = 0, g_i < 0
  IndexList theta;  // u_i = 0, g_i = 0 (biactive)
  IndexList nu;     // u_i > 0, g_i = 0
  IndexList i_G;    // active upper-level constraints
  IndexList i_u;    // u_i = 0
  IndexList i_g;    // g_i = 0
  IndexList i_ug;   // u_i g_i + t = 0
  double eps_act = kDefaultActiveTol;

  static bool contains(const IndexList& l, std::size_t i) { return std::find(l.begin(), l.end(), i) != l.end(); }
};

namespace detail {

// Thresholding only; membership is the caller's concern.
inline IndexSets classify_raw(const BilevelProblem& problem, const TriplePoint& pt, double t, double eps_act) {
  IndexSets s;
  s.eps_act = eps_act;
  const Vector G = problem.G(pt.x);
  for (std::size_t j = 0; j < problem.p(); ++j)
    if (G[static_cast<Eigen::Index>(j)] >= -eps_act) s.i_G.push_back(j);

  const Vector g = problem.g(pt.x, pt.y);
  for (std::size_t i = 0; i < problem.q(); ++i) {
    const auto k = static_cast<Eigen::Index>(i);
    const bool u_zero = std::abs(pt.u[k]) <= eps_act;
    const bool g_zero = std::abs(g[k]) <= eps_act;
    if (u_zero && !g_zero) s.eta.push_back(i);
    if (u_zero && g_zero) s.theta.push_back(i);
    if (!u_zero && g_zero) s.nu.push_back(i);
    if (u_zero) s.i_u.push_back(i);
    if (g_zero) s.i_g.push_back(i);
    // I_ug is disjoint from I_u and I_g whenever t > 0.
    if (t > 0.0 && !u_zero && !g_zero && std::abs(pt.u[k] * g[k] + t) <= eps_act) s.i_ug.push_back(i);
  }
  return s;
}

}  // namespace detail

inline IndexSets classify_indices(const BilevelProblem& problem, const TriplePoint& pt, double t,
                                  double eps_act = kDefaultActiveTol) {
  const KktResidual res = kkt_residual(problem, pt, t);
  if (const auto field = res.violated_field(eps_act); !field.empty())
    throw InfeasiblePointError("classify_indices: point is not in D^t(x) within tolerance, violated: " + field);
  return detail::classify_raw(problem, pt, t, eps_act);
}

// ---------------------------------------------------------------------------

struct SlaterResult {
  bool found = false;
  Vector y;              // strict point when found, best point otherwise
  double max_g = 0.0;    // max_i g_i(x, y) at y
  std::size_t starts_used = 0;
};

/// Looks for y with g_i(x, y) <= -eps_strict for all i by multistart pattern
/// search on max_i g_i(x, .). A failure is evidence, not proof.
inline SlaterResult check_slater(const BilevelProblem& problem, const Vector& x, std::size_t starts = 16,
                                 std::uint64_t seed = 0, double eps_strict = 1e-6) {
  problem.check_leader(x);
  const auto m = static_cast<Eigen::Index>(problem.m());
  if (problem.q() == 0) return {true, Vector::Zero(m), -INFINITY, 0};

  const Box box = problem.follower_box().empty() ? Box::uniform(problem.m(), -10.0, 10.0) : problem.follower_box();
  auto max_g = [&](const Vector& y) {
    const Vector g = problem.g(x, y);
    const double v = g.maxCoeff();
    return std::isfinite(v) ? v : INFINITY;
  };

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  SlaterResult best;
  best.max_g = INFINITY;
  best.y = 0.5 * (box.lower + box.upper);

  PatternSearchOptions opts;
  opts.initial_mesh = 0.25 * std::max(box.diameter(), 1e-3);
  opts.mesh_tol = 1e-8;
  opts.max_evals = 4000;
  opts.target = -eps_strict;
  opts.box = box;

  for (std::size_t s = 0; s < std::max<std::size_t>(starts, 1); ++s) {
    Vector y0 = 0.5 * (box.lower + box.upper);
    if (s > 0)
      for (Eigen::Index j = 0; j < m; ++j) y0[j] = box.lower[j] + unit(rng) * (box.upper[j] - box.lower[j]);
    const auto r = pattern_search(max_g, y0, opts);
    best.starts_used = s + 1;
    if (r.value < best.max_g || (r.value == best.max_g && lexicographic_less(r.x, best.y))) {
      best.max_g = r.value;
      best.y = r.x;
    }
    if (best.max_g <= -eps_strict) {
      best.found = true;
      break;
    }
  }
  return best;
}

struct UpperRegularity {
  bool regular = true;
  Vector certificate;  // nonzero alpha >= 0 with grad G^T alpha = 0 when not regular
  IndexList active;
};

/// MFCQ-type check on the upper-level constraints at x: regular iff the only
/// alpha >= 0 supported on the active set with grad G(x)^T alpha = 0 is zero.
/// Decided by max sum(alpha) subject to that system and 0 <= alpha <= 1.
inline UpperRegularity check_upper_regularity(const BilevelProblem& problem, const Vector& x,
                                              double eps = kDefaultActiveTol) {
  problem.check_leader(x);
  if (problem.leader_violation(x) > eps)
    throw InfeasiblePointError("check_upper_regularity: x is not in X within tolerance");
  UpperRegularity out;
  const Vector G = problem.G(x);
  for (std::size_t j = 0; j < problem.p(); ++j)
    if (G[static_cast<Eigen::Index>(j)] >= -eps) out.active.push_back(j);
  out.certificate = Vector::Zero(static_cast<Eigen::Index>(problem.p()));
  if (out.active.empty()) return out;

  const Matrix J = problem.jac_G(x);
  const auto na = static_cast<Eigen::Index>(out.active.size());
  LinearProgram lp(na);
  lp.upper.setOnes();
  lp.c.setConstant(-1.0);
  for (Eigen::Index col = 0; col < J.cols(); ++col) {
    Vector row(na);
    for (Eigen::Index a = 0; a < na; ++a) row[a] = J(static_cast<Eigen::Index>(out.active[static_cast<std::size_t>(a)]), col);
    lp.add_eq(row, 0.0);
  }
  const LpResult r = solve_lp(lp);
  if (r.status == LpStatus::optimal && -r.objective > 1e-9) {
    out.regular = false;
    for (Eigen::Index a = 0; a < na; ++a) out.certificate[static_cast<Eigen::Index>(out.active[static_cast<std::size_t>(a)])] = r.x[a];
  }
  return out;
}

}  // namespace pessim
