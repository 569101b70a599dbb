#pragma once

// Outer minimization of psi^t over X by compass search, and the t -> 0
// homotopy that chains those minimizations with warm starts.

#include "pessim/maxmin.hpp"
#include "pessim/pattern_search.hpp"

#include <cmath>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace pessim {

struct OuterConfig {
  double initial_mesh_frac = 0.25;  // of the leader box diameter
  double initial_mesh_abs = 0.25;   // used when X has no box
  double mesh_tol = 1e-5;
  double decrease_tol = 1e-10;
  std::size_t max_evals = 2000;
  double x_feas_tol = 1e-8;
};

enum class OuterStatus { converged, budget_exhausted, failure };

inline const char* to_string(OuterStatus s) {
  switch (s) {
    case OuterStatus::converged: return "converged";
    case OuterStatus::budget_exhausted: return "budget_exhausted";
    case OuterStatus::failure: return "failure";
  }
  return "unknown";
}

struct OuterResult {
  Vector x_star;
  double value = INFINITY;
  std::size_t evals = 0;        // psi^t evaluations
  std::size_t inner_evals = 0;  // inner function evaluations, summed
  double final_mesh = 0.0;
  SampledSet argmax;
  InnerStatus inner_status = InnerStatus::infeasible;
  OuterStatus status = OuterStatus::failure;
  std::string diagnostic;
};

/// Direct-search local minimizer of psi^t over X from x_init.
/// Polls whose inner problem is infeasible, or which leave X, count as +inf.
inline OuterResult minimize_psi_t(const BilevelProblem& problem, double t, const Vector& x_init,
                                  const InnerConfig& inner_cfg = {}, const OuterConfig& cfg = {}) {
  if (!(t >= 0.0)) throw UsageError("minimize_psi_t: t must be nonnegative");
  problem.check_leader(x_init);
  const Box& box = problem.leader_box();

  std::map<std::vector<double>, InnerSolveResult> seen;
  std::size_t inner_evals = 0;
  auto objective = [&](const Vector& x) -> double {
    if (problem.leader_violation(x) > cfg.x_feas_tol) return INFINITY;
    auto r = evaluate_psi_t(problem, x, t, inner_cfg);
    inner_evals += r.evals;
    const double v = r.status == InnerStatus::infeasible ? INFINITY : r.value;
    seen.emplace(to_std(x), std::move(r));
    return v;
  };

  PatternSearchOptions ps;
  ps.box = box;
  ps.initial_mesh = box.empty() ? cfg.initial_mesh_abs : cfg.initial_mesh_frac * box.diameter();
  if (!(ps.initial_mesh > 0.0)) ps.initial_mesh = cfg.mesh_tol;
  ps.mesh_tol = cfg.mesh_tol;
  ps.decrease_tol = cfg.decrease_tol;
  ps.max_evals = cfg.max_evals;
  const auto res = pattern_search(objective, x_init, ps);

  OuterResult out;
  out.x_star = res.x;
  out.value = res.value;
  out.evals = res.evals;
  out.inner_evals = inner_evals;
  out.final_mesh = res.final_mesh;
  if (auto it = seen.find(to_std(res.x)); it != seen.end()) {
    out.argmax = it->second.argmax;
    out.inner_status = it->second.status;
  }
  if (!std::isfinite(res.value)) {
    out.status = OuterStatus::failure;
    out.diagnostic = problem.leader_violation(res.x) > cfg.x_feas_tol
                         ? "starting point is outside X and no polled point was feasible"
                         : "inner problem infeasible at every polled point";
  } else {
    out.status = res.converged ? OuterStatus::converged : OuterStatus::budget_exhausted;
  }
  return out;
}

struct RelaxationParams {
  double t0 = 1.0;
  double rho = 0.5;
  double t_min = 1e-6;
  std::size_t max_outer_iters = 100;
  double x_tol = 0.0;  // <= 0 disables the leader-step stop
  InnerConfig inner;
  OuterConfig outer;
  std::uint64_t seed = 0;
  std::size_t max_warm_starts = 16;

  void validate() const {
    if (!(t_min > 0.0) || !(t0 > t_min)) throw UsageError("RelaxationParams: need t0 > t_min > 0");
    if (!(rho > 0.0 && rho < 1.0)) throw UsageError("RelaxationParams: need 0 < rho < 1");
    if (max_outer_iters == 0) throw UsageError("RelaxationParams: max_outer_iters must be positive");
    inner.validate();
  }
};

enum class TerminalReason { t_min_reached, x_converged, max_iters, failure };

inline const char* to_string(TerminalReason r) {
  switch (r) {
    case TerminalReason::t_min_reached: return "t_min_reached";
    case TerminalReason::x_converged: return "x_converged";
    case TerminalReason::max_iters: return "max_iters";
    case TerminalReason::failure: return "failure";
  }
  return "unknown";
}

struct TraceRecord {
  std::size_t k = 0;
  double t = 0.0;
  Vector x;
  double psi = INFINITY;
  SampledSet argmax;
  InnerStatus inner_status = InnerStatus::infeasible;
  std::size_t outer_evals = 0;
  std::size_t inner_evals = 0;
  double final_mesh = 0.0;        // pattern radius at termination
  double argmax_residual = 0.0;   // largest D^t membership residual over the argmax sample
};

struct RunTrace {
  std::vector<TraceRecord> records;
  TerminalReason terminal = TerminalReason::max_iters;
  std::string failure_reason;
};

namespace detail {

// Up to `cap` points spread evenly over the (sorted) set.
inline std::vector<Vector> thin_points(const SampledSet& s, std::size_t cap) {
  std::vector<Vector> out;
  if (s.points.empty() || cap == 0) return out;
  if (s.points.size() <= cap) return s.points;
  for (std::size_t i = 0; i < cap; ++i) out.push_back(s.points[i * (s.points.size() - 1) / (cap - 1 ? cap - 1 : 1)]);
  return out;
}

}  // namespace detail

/// t_{k+1} = rho t_k from t0 while t_k >= t_min; each step minimizes psi^{t_k}
/// from x_k with the previous argmax sample added to the inner starts.
inline RunTrace scholtes_solve(const BilevelProblem& problem, const RelaxationParams& params, const Vector& x0) {
  params.validate();
  problem.check_leader(x0);
  RunTrace trace;
  Vector x = problem.leader_box().project(x0);
  std::vector<Vector> warm;
  std::size_t small_steps = 0;
  double t = params.t0;
  std::size_t k = 0;
  for (; k < params.max_outer_iters && t >= params.t_min; ++k, t *= params.rho) {
    InnerConfig icfg = params.inner;
    icfg.seed = detail::splitmix64(params.seed + k);
    icfg.warm_starts.insert(icfg.warm_starts.end(), warm.begin(), warm.end());
    const OuterResult r = minimize_psi_t(problem, t, x, icfg, params.outer);
    if (r.status == OuterStatus::failure) {
      trace.terminal = TerminalReason::failure;
      trace.failure_reason = "k=" + std::to_string(k) + ": " + r.diagnostic;
      return trace;
    }
    TraceRecord rec;
    rec.k = k;
    rec.t = t;
    rec.x = r.x_star;
    rec.psi = r.value;
    rec.argmax = r.argmax;
    rec.inner_status = r.inner_status;
    rec.outer_evals = r.evals;
    rec.inner_evals = r.inner_evals;
    rec.final_mesh = r.final_mesh;
    for (const auto& z : r.argmax.points)
      rec.argmax_residual = std::max(
          rec.argmax_residual, kkt_residual(problem, TriplePoint::from_follower(r.x_star, z, problem.m()), t).max_violation());
    const double step = (r.x_star - x).norm();
    trace.records.push_back(std::move(rec));
    warm = detail::thin_points(r.argmax, params.max_warm_starts);
    x = r.x_star;
    if (params.x_tol > 0.0 && trace.records.size() > 1) {
      small_steps = step <= params.x_tol ? small_steps + 1 : 0;
      if (small_steps >= 2) {
        trace.terminal = TerminalReason::x_converged;
        return trace;
      }
    }
  }
  trace.terminal = t < params.t_min ? TerminalReason::t_min_reached : TerminalReason::max_iters;
  return trace;
}

}  // namespace pessim
