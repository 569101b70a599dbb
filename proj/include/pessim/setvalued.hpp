#pragma once

// Excess and Hausdorff distance between finite samples, sampling of D^t(x),
// and the per-iteration excess diagnostic of a homotopy run.

#include "pessim/maxmin.hpp"
#include "pessim/parallel.hpp"
#include "pessim/scholtes.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

namespace pessim {

/// Nonnegative distance or the exact +inf of the empty-set convention.
class SetDistance {
 public:
  SetDistance() = default;
  static SetDistance finite(double v) { return SetDistance(v, false); }
  static SetDistance infinite() { return SetDistance(0.0, true); }

  bool is_infinite() const { return inf_; }
  /// Finite value; +inf only when is_infinite().
  double value() const { return inf_ ? INFINITY : v_; }
  std::string str() const;

  friend bool operator==(const SetDistance& a, const SetDistance& b) {
    return a.inf_ == b.inf_ && (a.inf_ || a.v_ == b.v_);
  }
  friend bool operator<(const SetDistance& a, const SetDistance& b) {
    if (a.inf_) return false;
    return b.inf_ || a.v_ < b.v_;
  }
  friend bool operator<=(const SetDistance& a, const SetDistance& b) { return !(b < a); }
  friend SetDistance max(const SetDistance& a, const SetDistance& b) { return a < b ? b : a; }

 private:
  SetDistance(double v, bool inf) : v_(v), inf_(inf) {}
  double v_ = 0.0;
  bool inf_ = false;
};

inline std::string SetDistance::str() const {
  if (inf_) return "inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v_);
  return buf;
}

/// sup_{a in A} min_{b in B} |a - b|_2, with e(empty, B) = 0 and e(A, empty) = +inf.
inline SetDistance excess(const std::vector<Vector>& A, const std::vector<Vector>& B, std::size_t threads = 1) {
  if (A.empty()) return SetDistance::finite(0.0);
  if (B.empty()) return SetDistance::infinite();
  for (const auto& a : A)
    if (a.size() != B.front().size()) throw UsageError("excess: points of different dimensions");
  for (const auto& b : B)
    if (b.size() != B.front().size()) throw UsageError("excess: points of different dimensions");
  std::vector<double> row(A.size());
  parallel_for(A.size(), worker_count(threads), [&](std::size_t i) {
    double best = INFINITY;
    for (const auto& b : B) best = std::min(best, (A[i] - b).squaredNorm());
    row[i] = best;
  });
  return SetDistance::finite(std::sqrt(*std::max_element(row.begin(), row.end())));
}

inline SetDistance excess(const SampledSet& A, const SampledSet& B, std::size_t threads = 1) {
  return excess(A.points, B.points, threads);
}

inline SetDistance hausdorff(const SampledSet& A, const SampledSet& B, std::size_t threads = 1) {
  return max(excess(A, B, threads), excess(B, A, threads));
}

inline SetDistance hausdorff(const std::vector<Vector>& A, const std::vector<Vector>& B, std::size_t threads = 1) {
  return max(excess(A, B, threads), excess(B, A, threads));
}

/// Grid nodes of D^t(x) accepted by grid_feasible. Two samples taken on the
/// same grid are nested whenever their t values are.
inline SampledSet sample_relaxed_set(const BilevelProblem& problem, const Vector& x, double t, const GridSpec& grid,
                                     double feas_tol = kDefaultFeasTol) {
  if (!(t >= 0.0)) throw UsageError("sample_relaxed_set: t must be nonnegative");
  problem.check_leader(x);
  grid.validate(problem.m() + problem.q());
  const Vector h = grid.steps();
  SampledSet out;
  out.meta = grid.describe();
  const std::size_t total = grid.total();
  for (std::size_t k = 0; k < total; ++k) {
    const Vector z = grid.point(k);
    if (grid_feasible(problem, x, t, z, h, feas_tol)) out.points.push_back(z);
  }
  out.sort_lexicographic();
  return out;
}

struct MultistartSampleSpec {
  std::size_t starts = 64;
  std::uint64_t seed = 0;
  double u_max = 10.0;
  Box y_box;  // empty: as in InnerConfig
  double feas_tol = kDefaultFeasTol;
  int polish_iters = 40;
  double dedup_tol = 1e-6;
  std::size_t threads = 0;
};

/// Random points of the (y, u) box restored onto D^t(x) by the feasibility
/// polish; only exact members (at feas_tol) are kept.
inline SampledSet sample_relaxed_set(const BilevelProblem& problem, const Vector& x, double t,
                                     const MultistartSampleSpec& spec) {
  if (!(t >= 0.0)) throw UsageError("sample_relaxed_set: t must be nonnegative");
  problem.check_leader(x);
  InnerConfig icfg;
  icfg.y_box = spec.y_box;
  const Box ybox = detail::inner_y_box(problem, icfg);
  const RelaxedInnerProblem inner(problem, x, t);
  std::vector<Vector> pts(spec.starts);
  std::vector<char> ok(spec.starts, 0);
  parallel_for(spec.starts, worker_count(spec.threads), [&](std::size_t j) {
    Vector z = detail::random_start(ybox, problem.q(), spec.u_max, spec.seed, j);
    if (!polish_feasibility(inner, z, spec.polish_iters, 1e-3 * spec.feas_tol)) return;
    if (!kkt_residual(problem, TriplePoint::from_follower(x, z, problem.m()), t).is_member(spec.feas_tol)) return;
    pts[j] = z;
    ok[j] = 1;
  });
  SampledSet out;
  out.dedup_tol = spec.dedup_tol;
  out.meta = "multistart seed=" + std::to_string(spec.seed) + " starts=" + std::to_string(spec.starts);
  for (std::size_t j = 0; j < spec.starts; ++j)
    if (ok[j]) out.insert(pts[j]);
  out.sort_lexicographic();
  return out;
}

struct ExcessEntry {
  std::size_t k = 0;
  double t = 0.0;
  Vector x;
  SetDistance excess;
  bool flagged = false;  // the trace had no argmax sample at this k
};

struct ExcessSeries {
  std::vector<ExcessEntry> entries;
  SetDistance limit_estimate;
  SampledSet reference;  // sampled S_p(x_bar)
  std::string note = "at sampling resolution";
};

struct DiagnosticConfig {
  InnerConfig inner;  // used to sample S_p(x_bar) at t = 0
};

/// e(S_p^{t_k}(x_k), S_p(x_bar)) for every record of the trace.
inline ExcessSeries convergence_diagnostic(const BilevelProblem& problem, const RunTrace& trace, const Vector& x_bar,
                                           const DiagnosticConfig& cfg = {}) {
  if (trace.records.empty()) throw UsageError("convergence_diagnostic: empty trace");
  problem.check_leader(x_bar);
  ExcessSeries out;
  out.reference = approximate_argmax_set(problem, x_bar, 0.0, cfg.inner);
  for (const auto& r : trace.records) {
    ExcessEntry e;
    e.k = r.k;
    e.t = r.t;
    e.x = r.x;
    e.flagged = r.argmax.empty();
    e.excess = excess(r.argmax, out.reference, cfg.inner.threads);
    out.entries.push_back(std::move(e));
  }
  out.limit_estimate = out.entries.back().excess;
  return out;
}

}  // namespace pessim
