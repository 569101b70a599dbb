#pragma once

// Relaxed pessimistic value function psi^t(x) = max { F(x, y) : (y, u) in D^t(x) }
// by multistart local maximization, an exhaustive grid maximizer used as an
// independent oracle, and finite approximations of the argmax set.

#include "pessim/kkt.hpp"
#include "pessim/local_solver.hpp"
#include "pessim/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

namespace pessim {

/// Finite point cloud in R^{m+q}, free of duplicates within dedup_tol.
struct SampledSet {
  std::vector<Vector> points;
  std::string meta;
  double dedup_tol = 1e-9;

  bool empty() const { return points.empty(); }
  std::size_t size() const { return points.size(); }

  /// Appends z unless an existing point lies within dedup_tol (inf-norm).
  bool insert(const Vector& z) {
    for (const auto& p : points)
      if (p.size() == z.size() && (p - z).cwiseAbs().maxCoeff() <= dedup_tol) return false;
    points.push_back(z);
    return true;
  }
  void sort_lexicographic() {
    std::sort(points.begin(), points.end(), [](const Vector& a, const Vector& b) { return lexicographic_less(a, b); });
  }
};

enum class InnerStatus { solved, infeasible, budget_exhausted };

inline const char* to_string(InnerStatus s) {
  switch (s) {
    case InnerStatus::solved: return "solved";
    case InnerStatus::infeasible: return "infeasible";
    case InnerStatus::budget_exhausted: return "budget_exhausted";
  }
  return "unknown";
}

struct InnerConfig {
  std::size_t starts = 32;
  int sweeps = 5;
  double penalty0 = 10.0;
  double penalty_growth = 10.0;
  int max_local_iters = 300;
  double feas_tol = kDefaultFeasTol;
  double eps_lvl = 1e-4;
  double u_max = 10.0;
  Box y_box;  // empty: the problem's follower box, else [-10, 10]^m
  std::uint64_t seed = 0;
  std::size_t threads = 0;
  std::vector<Vector> warm_starts;  // stacked (y, u), tried after the random starts
  double dedup_tol = 1e-9;

  void validate() const {
    if (starts == 0 && warm_starts.empty()) throw UsageError("InnerConfig: at least one start is required");
    if (sweeps < 1 || max_local_iters < 1) throw UsageError("InnerConfig: sweeps and max_local_iters must be positive");
    if (!(penalty0 > 0.0) || !(penalty_growth >= 1.0)) throw UsageError("InnerConfig: bad penalty schedule");
    if (!(feas_tol > 0.0) || !(eps_lvl >= 0.0) || !(u_max > 0.0) || !(dedup_tol >= 0.0))
      throw UsageError("InnerConfig: tolerances must be positive");
  }
};

struct InnerSolveResult {
  double value = -INFINITY;
  SampledSet argmax;
  InnerStatus status = InnerStatus::infeasible;
  std::size_t evals = 0;
  std::size_t feasible_starts = 0;
};

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t v) {
  v += 0x9e3779b97f4a7c15ULL;
  v = (v ^ (v >> 30)) * 0xbf58476d1ce4e5b9ULL;
  v = (v ^ (v >> 27)) * 0x94d049bb133111ebULL;
  return v ^ (v >> 31);
}

inline Box inner_y_box(const BilevelProblem& problem, const InnerConfig& cfg) {
  if (!cfg.y_box.empty()) return cfg.y_box;
  if (!problem.follower_box().empty()) return problem.follower_box();
  return Box::uniform(problem.m(), -10.0, 10.0);
}

// Start j depends only on (seed, j).
inline Vector random_start(const Box& ybox, std::size_t q, double u_max, std::uint64_t seed, std::size_t j) {
  std::mt19937_64 rng(splitmix64(seed ^ splitmix64(static_cast<std::uint64_t>(j) + 1)));
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const Eigen::Index m = ybox.size();
  Vector z(m + static_cast<Eigen::Index>(q));
  for (Eigen::Index i = 0; i < m; ++i) z[i] = ybox.lower[i] + unit(rng) * (ybox.upper[i] - ybox.lower[i]);
  for (Eigen::Index i = 0; i < static_cast<Eigen::Index>(q); ++i) z[m + i] = unit(rng) * u_max;
  return z;
}

}  // namespace detail

/// Multistart estimate of psi^t(x) together with its near-argmax set.
inline InnerSolveResult evaluate_psi_t(const BilevelProblem& problem, const Vector& x, double t,
                                       const InnerConfig& cfg = {}) {
  if (!(t >= 0.0)) throw UsageError("evaluate_psi_t: t must be nonnegative");
  problem.check_leader(x);
  cfg.validate();
  const std::size_t dim = problem.m() + problem.q();
  for (const auto& w : cfg.warm_starts)
    if (static_cast<std::size_t>(w.size()) != dim) throw UsageError("evaluate_psi_t: warm start has wrong size");

  const RelaxedInnerProblem inner(problem, x, t);
  const Box ybox = detail::inner_y_box(problem, cfg);
  LocalSolveOptions lopt;
  lopt.sweeps = cfg.sweeps;
  lopt.penalty0 = cfg.penalty0;
  lopt.penalty_growth = cfg.penalty_growth;
  lopt.max_iters = cfg.max_local_iters;

  const std::size_t total = cfg.starts + cfg.warm_starts.size();
  std::vector<LocalSolution> sols(total);
  parallel_for(total, worker_count(cfg.threads), [&](std::size_t j) {
    const Vector z0 = j < cfg.starts ? detail::random_start(ybox, problem.q(), cfg.u_max, cfg.seed, j)
                                     : cfg.warm_starts[j - cfg.starts];
    sols[j] = solve_local(inner, z0, lopt, cfg.feas_tol);
  });

  InnerSolveResult res;
  res.argmax.dedup_tol = cfg.dedup_tol;
  res.argmax.meta = "multistart seed=" + std::to_string(cfg.seed) + " starts=" + std::to_string(cfg.starts) +
                    " warm=" + std::to_string(cfg.warm_starts.size());
  for (const auto& s : sols) {
    res.evals += s.evals;
    if (!s.feasible) continue;
    // The polished point must pass the same membership test callers use.
    if (!kkt_residual(problem, TriplePoint::from_follower(x, s.z, problem.m()), t).is_member(cfg.feas_tol)) continue;
    ++res.feasible_starts;
    res.value = std::max(res.value, s.F);
  }
  if (res.feasible_starts == 0) return res;
  // A value is only reported as solved when some start reaching it converged.
  bool best_converged = false;
  for (const auto& s : sols) {
    if (!s.feasible || s.F < res.value - cfg.eps_lvl) continue;
    if (!kkt_residual(problem, TriplePoint::from_follower(x, s.z, problem.m()), t).is_member(cfg.feas_tol)) continue;
    res.argmax.insert(s.z);
    best_converged = best_converged || s.converged;
  }
  res.argmax.sort_lexicographic();
  res.status = best_converged ? InnerStatus::solved : InnerStatus::budget_exhausted;
  return res;
}

/// psi(x) is the t = 0 case.
inline InnerSolveResult evaluate_psi(const BilevelProblem& problem, const Vector& x, const InnerConfig& cfg = {}) {
  return evaluate_psi_t(problem, x, 0.0, cfg);
}

inline SampledSet approximate_argmax_set(const BilevelProblem& problem, const Vector& x, double t,
                                         const InnerConfig& cfg = {}) {
  auto r = evaluate_psi_t(problem, x, t, cfg);
  if (r.status == InnerStatus::infeasible)
    throw InfeasiblePointError("approximate_argmax_set: no feasible point of D^t(x) was found");
  return r.argmax;
}

// ---------------------------------------------------------------------------
// Grid oracle

/// count points from lo to hi inclusive; count 1 means the single value lo.
struct GridAxis {
  double lo = 0.0;
  double hi = 0.0;
  std::size_t count = 1;

  double step() const { return count > 1 ? (hi - lo) / static_cast<double>(count - 1) : 0.0; }
  double at(std::size_t k) const { return count > 1 ? lo + static_cast<double>(k) * step() : lo; }
};

/// One axis per coordinate of (y, u).
struct GridSpec {
  std::vector<GridAxis> axes;

  std::size_t total() const {
    std::size_t n = 1;
    for (const auto& a : axes) n *= a.count;
    return n;
  }
  Vector steps() const {
    Vector h(static_cast<Eigen::Index>(axes.size()));
    for (std::size_t i = 0; i < axes.size(); ++i) h[static_cast<Eigen::Index>(i)] = axes[i].step();
    return h;
  }
  /// Point with mixed-radix index k (first axis fastest).
  Vector point(std::size_t k) const {
    Vector z(static_cast<Eigen::Index>(axes.size()));
    for (std::size_t i = 0; i < axes.size(); ++i) {
      z[static_cast<Eigen::Index>(i)] = axes[i].at(k % axes[i].count);
      k /= axes[i].count;
    }
    return z;
  }
  std::string describe() const {
    std::string s = "grid";
    for (const auto& a : axes)
      s += " [" + std::to_string(a.lo) + "," + std::to_string(a.hi) + "]x" + std::to_string(a.count);
    return s;
  }

  void validate(std::size_t dim) const {
    if (axes.size() != dim) throw UsageError("GridSpec: need one axis per coordinate of (y, u)");
    for (const auto& a : axes) {
      if (a.count == 0) throw UsageError("GridSpec: axis with zero points");
      if (!std::isfinite(a.lo) || !std::isfinite(a.hi) || a.hi < a.lo)
        throw UsageError("GridSpec: finite box bounds lo <= hi required on every axis");
    }
  }
};

/// Membership of a grid node in D^t(x) with a tolerance that absorbs half a
/// grid cell: each constraint c may deviate by 1/2 sum_j |dc/dz_j| h_j + feas_tol.
/// The tolerance does not depend on t, so on a fixed grid the accepted node
/// set grows monotonically with t.
inline bool grid_feasible(const BilevelProblem& problem, const Vector& x, double t, const Vector& z, const Vector& h,
                          double feas_tol = kDefaultFeasTol) {
  const auto m = static_cast<Eigen::Index>(problem.m());
  const auto q = static_cast<Eigen::Index>(problem.q());
  const Vector y = z.head(m);
  const Vector u = z.tail(q);
  const Vector hy = h.head(m);
  const Vector hu = h.tail(q);
  for (Eigen::Index i = 0; i < q; ++i)
    if (u[i] < -0.5 * hu[i] - feas_tol) return false;

  Vector L = problem.grad_f(x, y).dy;
  Matrix Ly = problem.hess_f_yy(x, y);
  if (q > 0) {
    const Vector g = problem.g(x, y);
    const Matrix Jy = problem.jac_g(x, y).dy;
    if (!g.allFinite() || !Jy.allFinite()) return false;
    for (Eigen::Index i = 0; i < q; ++i) {
      const double tol_g = 0.5 * Jy.row(i).cwiseAbs().dot(hy) + feas_tol;
      if (g[i] > tol_g) return false;
      const double tol_r = 0.5 * (std::abs(u[i]) * Jy.row(i).cwiseAbs().dot(hy) + std::abs(g[i]) * hu[i]) + feas_tol;
      if (-u[i] * g[i] - t > tol_r) return false;
    }
    L.noalias() += Jy.transpose() * u;
    const auto Hyy = problem.hess_g_yy(x, y);
    for (Eigen::Index i = 0; i < q; ++i) Ly += u[i] * Hyy[static_cast<std::size_t>(i)];
    const Matrix Lu = Jy.transpose();
    for (Eigen::Index l = 0; l < m; ++l) {
      const double tol = 0.5 * (Ly.row(l).cwiseAbs().dot(hy) + Lu.row(l).cwiseAbs().dot(hu)) + feas_tol;
      if (!std::isfinite(L[l]) || std::abs(L[l]) > tol) return false;
    }
  } else {
    for (Eigen::Index l = 0; l < m; ++l) {
      const double tol = 0.5 * Ly.row(l).cwiseAbs().dot(hy) + feas_tol;
      if (!std::isfinite(L[l]) || std::abs(L[l]) > tol) return false;
    }
  }
  return true;
}

struct BruteForceResult {
  double value = -INFINITY;  // -inf when no node is feasible
  bool feasible = false;
  std::size_t feasible_count = 0;
  Vector best;  // maximizing node, lexicographically smallest on ties
};

inline constexpr std::size_t kBruteForceMaxDim = 4;

/// Exhaustive maximization of F over the feasible nodes of the grid.
inline BruteForceResult brute_force_psi_t(const BilevelProblem& problem, const Vector& x, double t,
                                          const GridSpec& grid, double feas_tol = kDefaultFeasTol) {
  if (!(t >= 0.0)) throw UsageError("brute_force_psi_t: t must be nonnegative");
  problem.check_leader(x);
  const std::size_t dim = problem.m() + problem.q();
  if (dim > kBruteForceMaxDim) throw UsageError("brute_force_psi_t: requires m + q <= 4");
  grid.validate(dim);
  const Vector h = grid.steps();
  const auto m = static_cast<Eigen::Index>(problem.m());
  BruteForceResult res;
  const std::size_t total = grid.total();
  for (std::size_t k = 0; k < total; ++k) {
    const Vector z = grid.point(k);
    if (!grid_feasible(problem, x, t, z, h, feas_tol)) continue;
    const double F = problem.F(x, z.head(m));
    if (!std::isfinite(F)) continue;
    ++res.feasible_count;
    if (!res.feasible || F > res.value || (F == res.value && lexicographic_less(z, res.best))) {
      res.value = F;
      res.best = z;
      res.feasible = true;
    }
  }
  return res;
}

}  // namespace pessim
