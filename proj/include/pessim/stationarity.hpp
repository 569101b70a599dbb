#pragma once

// C-, M- and S-stationarity of the KKT reformulation, the stationarity system
// of the relaxed problem, and the qualification conditions attached to them.
//
// Over the biactive set theta every condition is a finite union of polyhedral
// branches in (gamma_i, a_i) with a_i = grad_y g_i . beta:
//   C: {gamma_i >= 0, a_i >= 0} or {gamma_i <= 0, a_i <= 0}
//   M: {gamma_i <= 0, a_i <= 0} or {gamma_i = 0} or {a_i = 0}
//   S: {gamma_i <= 0, a_i <= 0}
// Each combination of branches is a linear system solved with the in-repo simplex.

#include "pessim/kkt.hpp"
#include "pessim/linprog.hpp"
#include "pessim/maxmin.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

namespace pessim {

enum class StationarityKind { C, M, S, relaxed };

inline const char* to_string(StationarityKind k) {
  switch (k) {
    case StationarityKind::C: return "C";
    case StationarityKind::M: return "M";
    case StationarityKind::S: return "S";
    case StationarityKind::relaxed: return "relaxed";
  }
  return "?";
}

inline StationarityKind parse_kind(const std::string& s) {
  if (s == "C" || s == "c") return StationarityKind::C;
  if (s == "M" || s == "m") return StationarityKind::M;
  if (s == "S" || s == "s") return StationarityKind::S;
  if (s == "relaxed") return StationarityKind::relaxed;
  throw UsageError("unknown stationarity kind '" + s + "' (expected C, M, S or relaxed)");
}

/// Branch chosen for one biactive index.
enum class ThetaBranch { nonneg, nonpos, gamma_zero, a_zero };

inline const char* to_string(ThetaBranch b) {
  switch (b) {
    case ThetaBranch::nonneg: return "nonneg";
    case ThetaBranch::nonpos: return "nonpos";
    case ThetaBranch::gamma_zero: return "gamma_zero";
    case ThetaBranch::a_zero: return "a_zero";
  }
  return "?";
}

inline std::vector<ThetaBranch> theta_branches(StationarityKind kind) {
  switch (kind) {
    case StationarityKind::C: return {ThetaBranch::nonneg, ThetaBranch::nonpos};
    case StationarityKind::M: return {ThetaBranch::nonpos, ThetaBranch::gamma_zero, ThetaBranch::a_zero};
    case StationarityKind::S: return {ThetaBranch::nonpos};
    case StationarityKind::relaxed: break;
  }
  throw UsageError("theta_branches: kind must be C, M or S");
}

inline constexpr std::size_t kDefaultPatternCap = 12;

struct Multipliers {
  Vector alpha;  // p, >= 0
  Vector beta;   // m
  Vector gamma;  // q
};

struct RelaxedMultipliers {
  Vector alpha;  // p, >= 0
  Vector beta;   // m
  Vector gamma;  // q, >= 0
  Vector mu;     // q, >= 0
  Vector delta;  // q, >= 0
};

struct StationarityOptions {
  double tol = 1e-8;                // verdict threshold on residual_inf
  double eps_act = kDefaultActiveTol;
  std::size_t pattern_cap = kDefaultPatternCap;
  bool check_graph = true;          // evaluate the gph S_p / gph S_p^t surrogate
  InnerConfig inner;                // inner solver used by that surrogate
};

struct ResidualRow {
  std::string name;
  double value = 0.0;
};

struct StationarityReport {
  StationarityKind kind = StationarityKind::C;
  double residual_inf = 0.0;
  double tol = 0.0;
  bool pass = false;
  std::vector<ResidualRow> rows;
  std::vector<std::string> flagged;
  Multipliers multipliers;
  std::optional<RelaxedMultipliers> relaxed;
  std::vector<ThetaBranch> sign_pattern;
  IndexSets index_sets;
  std::optional<double> psi_reference;  // inner max used by the graph surrogate

  const ResidualRow* find(const std::string& name) const {
    for (const auto& r : rows)
      if (r.name == name) return &r;
    return nullptr;
  }
  bool is_flagged(const std::string& prefix) const {
    return std::any_of(flagged.begin(), flagged.end(), [&](const std::string& f) { return f.rfind(prefix, 0) == 0; });
  }
};

struct MultiplierRecovery {
  bool feasible = false;
  Multipliers multipliers;
  std::vector<ThetaBranch> sign_pattern;
  IndexSets index_sets;
  std::size_t patterns_tried = 0;
};

struct RelaxedRecovery {
  bool feasible = false;
  RelaxedMultipliers multipliers;
  IndexSets index_sets;
};

namespace detail {

inline Eigen::Index idx(std::size_t i) { return static_cast<Eigen::Index>(i); }

// Derivatives at pt shared by every system below.
struct PointDerivatives {
  Vector Fx, Fy;  // grad F
  Matrix JG;      // p x n
  Vector G;
  Vector g;       // q
  Matrix gx, gy;  // q x n, q x m
  Matrix Lx, Ly;  // m x n, m x m

  PointDerivatives(const BilevelProblem& problem, const TriplePoint& pt) {
    const auto gF = problem.grad_F(pt.x, pt.y);
    Fx = gF.dx;
    Fy = gF.dy;
    JG = problem.jac_G(pt.x);
    G = problem.G(pt.x);
    g = problem.g(pt.x, pt.y);
    const auto jg = problem.jac_g(pt.x, pt.y);
    gx = jg.dx;
    gy = jg.dy;
    const auto LJ = lagrangian_jacobians(problem, pt);
    Lx = LJ.dx;
    Ly = LJ.dy;
  }
};

inline void check_cap(const IndexSets& s, std::size_t cap, const char* who) {
  if (s.theta.size() > cap)
    throw CheckerRefusal(std::string(who) + ": biactive set has " + std::to_string(s.theta.size()) +
                         " indices, above the sign-pattern cap of " + std::to_string(cap));
}

// Mixed-radix decoding of pattern number k over |theta| digits.
inline std::vector<ThetaBranch> decode_pattern(std::size_t k, std::size_t digits, const std::vector<ThetaBranch>& br) {
  std::vector<ThetaBranch> out(digits);
  for (std::size_t d = 0; d < digits; ++d) {
    out[d] = br[k % br.size()];
    k /= br.size();
  }
  return out;
}

inline std::size_t pattern_count(std::size_t digits, std::size_t radix) {
  std::size_t n = 1;
  for (std::size_t d = 0; d < digits; ++d) n *= radix;
  return n;
}

inline Vector unit_row(Eigen::Index n, Eigen::Index j, double v = 1.0) {
  Vector r = Vector::Zero(n);
  r[j] = v;
  return r;
}

// Distance of (gamma_i, a_i) to one branch.
inline double branch_violation(ThetaBranch b, double gamma, double a) {
  switch (b) {
    case ThetaBranch::nonneg: return std::max({0.0, -gamma, -a});
    case ThetaBranch::nonpos: return std::max({0.0, gamma, a});
    case ThetaBranch::gamma_zero: return std::abs(gamma);
    case ThetaBranch::a_zero: return std::abs(a);
  }
  return INFINITY;
}

inline double union_violation(StationarityKind kind, double gamma, double a) {
  double v = INFINITY;
  for (const auto b : theta_branches(kind)) v = std::min(v, branch_violation(b, gamma, a));
  return v;
}

inline void push_vector_rows(std::vector<ResidualRow>& rows, const std::string& name, const Vector& v) {
  for (Eigen::Index i = 0; i < v.size(); ++i) rows.push_back({name + "[" + std::to_string(i) + "]", std::abs(v[i])});
}

inline void finalize(StationarityReport& rep) {
  rep.residual_inf = 0.0;
  for (const auto& r : rep.rows) {
    const double v = std::isfinite(r.value) ? r.value : INFINITY;
    rep.residual_inf = std::max(rep.residual_inf, v);
    if (!(v <= rep.tol)) rep.flagged.push_back(r.name);
  }
  rep.pass = rep.residual_inf <= rep.tol;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// C / M / S

/// Searches the theta branches in pattern order; the first feasible pattern's
/// least-L1 multipliers are returned.
inline MultiplierRecovery recover_c_multipliers(const BilevelProblem& problem, const TriplePoint& pt,
                                                StationarityKind kind, const StationarityOptions& opts = {}) {
  using namespace detail;
  const auto branches = theta_branches(kind);
  MultiplierRecovery out;
  out.index_sets = classify_indices(problem, pt, 0.0, opts.eps_act);
  if (problem.leader_violation(pt.x) > opts.eps_act)
    throw InfeasiblePointError("recover_c_multipliers: x is not in X within tolerance");
  const IndexSets& s = out.index_sets;
  check_cap(s, opts.pattern_cap, "recover_c_multipliers");

  const PointDerivatives d(problem, pt);
  const auto n = idx(problem.n()), m = idx(problem.m()), p = idx(problem.p()), q = idx(problem.q());
  // Columns: alpha | beta+ | beta- | gamma+ | gamma-.
  const Eigen::Index oa = 0, obp = p, obm = p + m, ogp = p + 2 * m, ogm = p + 2 * m + q, nv = p + 2 * m + 2 * q;
  LinearProgram base(nv);
  base.c.setOnes();
  for (Eigen::Index j = 0; j < p; ++j)
    if (!IndexSets::contains(s.i_G, static_cast<std::size_t>(j))) base.upper[oa + j] = 0.0;
  for (const auto i : s.eta) base.upper[ogp + idx(i)] = base.upper[ogm + idx(i)] = 0.0;
  for (Eigen::Index r = 0; r < n; ++r) {
    Vector row = Vector::Zero(nv);
    row.segment(oa, p) = d.JG.col(r);
    row.segment(obp, m) = d.Lx.col(r);
    row.segment(obm, m) = -d.Lx.col(r);
    row.segment(ogp, q) = d.gx.col(r);
    row.segment(ogm, q) = -d.gx.col(r);
    base.add_eq(row, -d.Fx[r]);
  }
  for (Eigen::Index r = 0; r < m; ++r) {
    Vector row = Vector::Zero(nv);
    row.segment(obp, m) = d.Ly.col(r);
    row.segment(obm, m) = -d.Ly.col(r);
    row.segment(ogp, q) = d.gy.col(r);
    row.segment(ogm, q) = -d.gy.col(r);
    base.add_eq(row, -d.Fy[r]);
  }
  auto a_row = [&](std::size_t i) {
    Vector row = Vector::Zero(nv);
    row.segment(obp, m) = d.gy.row(idx(i)).transpose();
    row.segment(obm, m) = -d.gy.row(idx(i)).transpose();
    return row;
  };
  for (const auto i : s.nu) base.add_eq(a_row(i), 0.0);

  const std::size_t total = pattern_count(s.theta.size(), branches.size());
  for (std::size_t k = 0; k < total; ++k) {
    const auto pattern = decode_pattern(k, s.theta.size(), branches);
    LinearProgram lp = base;
    for (std::size_t d_i = 0; d_i < s.theta.size(); ++d_i) {
      const std::size_t i = s.theta[d_i];
      switch (pattern[d_i]) {
        case ThetaBranch::nonneg:
          lp.upper[ogm + idx(i)] = 0.0;
          lp.add_ub(-a_row(i), 0.0);
          break;
        case ThetaBranch::nonpos:
          lp.upper[ogp + idx(i)] = 0.0;
          lp.add_ub(a_row(i), 0.0);
          break;
        case ThetaBranch::gamma_zero:
          lp.upper[ogp + idx(i)] = lp.upper[ogm + idx(i)] = 0.0;
          break;
        case ThetaBranch::a_zero:
          lp.add_eq(a_row(i), 0.0);
          break;
      }
    }
    ++out.patterns_tried;
    const LpResult r = solve_lp(lp);
    if (r.status != LpStatus::optimal) continue;
    out.feasible = true;
    out.sign_pattern = pattern;
    out.multipliers.alpha = r.x.segment(oa, p);
    out.multipliers.beta = r.x.segment(obp, m) - r.x.segment(obm, m);
    out.multipliers.gamma = r.x.segment(ogp, q) - r.x.segment(ogm, q);
    return out;
  }
  return out;
}

/// Residuals of the C/M/S system (St0 surrogate, St3-St8) at (pt, mults).
inline StationarityReport check_stationarity(const BilevelProblem& problem, const TriplePoint& pt,
                                             const Multipliers& mults, StationarityKind kind,
                                             const StationarityOptions& opts = {}) {
  using namespace detail;
  problem.check_point(pt);
  if (kind == StationarityKind::relaxed) throw UsageError("check_stationarity: use check_relaxed_stationarity");
  const auto n = idx(problem.n()), m = idx(problem.m()), p = idx(problem.p()), q = idx(problem.q());
  if (mults.alpha.size() != p || mults.beta.size() != m || mults.gamma.size() != q)
    throw UsageError("check_stationarity: multiplier dimensions do not match the problem");

  StationarityReport rep;
  rep.kind = kind;
  rep.tol = opts.tol;
  rep.multipliers = mults;
  rep.index_sets = classify_raw(problem, pt, 0.0, opts.eps_act);
  const IndexSets& s = rep.index_sets;
  const PointDerivatives d(problem, pt);
  const Vector& al = mults.alpha;
  const Vector& be = mults.beta;
  const Vector& ga = mults.gamma;

  const KktResidual kr = kkt_residual(problem, pt, 0.0);
  rep.rows.push_back({"St0.membership", kr.max_violation()});
  if (opts.check_graph) {
    const auto inner = evaluate_psi_t(problem, pt.x, 0.0, opts.inner);
    rep.psi_reference = inner.value;
    const double F = problem.F(pt.x, pt.y);
    rep.rows.push_back({"St0.level", inner.status == InnerStatus::infeasible
                                         ? INFINITY
                                         : std::max(0.0, inner.value - opts.inner.eps_lvl - F)});
  }
  push_vector_rows(rep.rows, "St3", d.Fx + d.JG.transpose() * al + d.Lx.transpose() * be + d.gx.transpose() * ga);
  push_vector_rows(rep.rows, "St4", d.Fy + d.Ly.transpose() * be + d.gy.transpose() * ga);
  for (Eigen::Index j = 0; j < p; ++j) {
    rep.rows.push_back({"St5.alpha[" + std::to_string(j) + "]", std::max(0.0, -al[j])});
    rep.rows.push_back({"St5.G[" + std::to_string(j) + "]", std::max(0.0, d.G[j])});
    rep.rows.push_back({"St5.alphaG[" + std::to_string(j) + "]", std::abs(al[j] * d.G[j])});
  }
  for (const auto i : s.nu)
    rep.rows.push_back({"St6.grad_g_nu_beta[" + std::to_string(i) + "]", std::abs(d.gy.row(idx(i)).dot(be))});
  for (const auto i : s.eta) rep.rows.push_back({"St6.gamma_eta[" + std::to_string(i) + "]", std::abs(ga[idx(i)])});
  for (const auto i : s.theta) {
    const double a = d.gy.row(idx(i)).dot(be);
    rep.rows.push_back({"St8.theta[" + std::to_string(i) + "]", union_violation(kind, ga[idx(i)], a)});
    // Report the branch the point actually sits in, first match in branch order.
    ThetaBranch chosen = theta_branches(kind).front();
    double best = INFINITY;
    for (const auto b : theta_branches(kind))
      if (const double v = branch_violation(b, ga[idx(i)], a); v < best) {
        best = v;
        chosen = b;
      }
    rep.sign_pattern.push_back(chosen);
  }
  (void)n;
  finalize(rep);
  return rep;
}

// ---------------------------------------------------------------------------
// Relaxed problem

/// Least-L1 solution of the relaxed stationarity system with the
/// complementarity conditions turned into support restrictions.
inline RelaxedRecovery recover_relaxed_multipliers(const BilevelProblem& problem, double t, const TriplePoint& pt,
                                                   const StationarityOptions& opts = {}) {
  using namespace detail;
  if (!(t > 0.0)) throw UsageError("recover_relaxed_multipliers: t must be positive");
  RelaxedRecovery out;
  out.index_sets = classify_indices(problem, pt, t, opts.eps_act);
  if (problem.leader_violation(pt.x) > opts.eps_act)
    throw InfeasiblePointError("recover_relaxed_multipliers: x is not in X within tolerance");
  const IndexSets& s = out.index_sets;
  const PointDerivatives d(problem, pt);
  const auto n = idx(problem.n()), m = idx(problem.m()), p = idx(problem.p()), q = idx(problem.q());
  const Vector& u = pt.u;

  // Columns: alpha | beta+ | beta- | gamma | mu | delta.
  const Eigen::Index oa = 0, obp = p, obm = p + m, og = p + 2 * m, om = og + q, od = om + q, nv = od + q;
  LinearProgram lp(nv);
  lp.c.setOnes();
  for (Eigen::Index j = 0; j < p; ++j)
    if (!IndexSets::contains(s.i_G, static_cast<std::size_t>(j))) lp.upper[oa + j] = 0.0;
  for (Eigen::Index i = 0; i < q; ++i) {
    const auto ui = static_cast<std::size_t>(i);
    if (!IndexSets::contains(s.i_g, ui)) lp.upper[og + i] = 0.0;
    if (!IndexSets::contains(s.i_u, ui)) lp.upper[om + i] = 0.0;
    if (!IndexSets::contains(s.i_ug, ui)) lp.upper[od + i] = 0.0;
  }
  // grad F + grad G^T alpha - grad L^T beta - sum_i (gamma_i - delta_i u_i) grad g_i = 0, x then y blocks.
  auto block_rows = [&](const Vector& Fz, const Matrix* JG, const Matrix& Lz, const Matrix& gz) {
    for (Eigen::Index r = 0; r < Fz.size(); ++r) {
      Vector row = Vector::Zero(nv);
      if (JG) row.segment(oa, p) = JG->col(r);
      row.segment(obp, m) = -Lz.col(r);
      row.segment(obm, m) = Lz.col(r);
      row.segment(og, q) = -gz.col(r);
      row.segment(od, q) = gz.col(r).cwiseProduct(u);
      lp.add_eq(row, -Fz[r]);
    }
  };
  block_rows(d.Fx, &d.JG, d.Lx, d.gx);
  block_rows(d.Fy, nullptr, d.Ly, d.gy);
  // -grad_y g_i beta + mu_i + delta_i g_i = 0.
  for (Eigen::Index i = 0; i < q; ++i) {
    Vector row = Vector::Zero(nv);
    row.segment(obp, m) = -d.gy.row(i).transpose();
    row.segment(obm, m) = d.gy.row(i).transpose();
    row[om + i] = 1.0;
    row[od + i] = d.g[i];
    lp.add_eq(row, 0.0);
  }
  (void)n;
  const LpResult r = solve_lp(lp);
  if (r.status != LpStatus::optimal) return out;
  out.feasible = true;
  out.multipliers.alpha = r.x.segment(oa, p);
  out.multipliers.beta = r.x.segment(obp, m) - r.x.segment(obm, m);
  out.multipliers.gamma = r.x.segment(og, q);
  out.multipliers.mu = r.x.segment(om, q);
  out.multipliers.delta = r.x.segment(od, q);
  return out;
}

inline StationarityReport check_relaxed_stationarity(const BilevelProblem& problem, double t, const TriplePoint& pt,
                                                     const RelaxedMultipliers& rm, const StationarityOptions& opts = {}) {
  using namespace detail;
  problem.check_point(pt);
  if (!(t > 0.0)) throw UsageError("check_relaxed_stationarity: t must be positive");
  const auto m = idx(problem.m()), p = idx(problem.p()), q = idx(problem.q());
  if (rm.alpha.size() != p || rm.beta.size() != m || rm.gamma.size() != q || rm.mu.size() != q || rm.delta.size() != q)
    throw UsageError("check_relaxed_stationarity: multiplier dimensions do not match the problem");

  StationarityReport rep;
  rep.kind = StationarityKind::relaxed;
  rep.tol = opts.tol;
  rep.relaxed = rm;
  rep.multipliers = Multipliers{rm.alpha, rm.beta, rm.gamma};
  rep.index_sets = classify_raw(problem, pt, t, opts.eps_act);
  const PointDerivatives d(problem, pt);
  const Vector& u = pt.u;
  const Vector w = rm.gamma - rm.delta.cwiseProduct(u);

  const KktResidual kr = kkt_residual(problem, pt, t);
  rep.rows.push_back({"Er0.membership", kr.max_violation()});
  if (opts.check_graph) {
    const auto inner = evaluate_psi_t(problem, pt.x, t, opts.inner);
    rep.psi_reference = inner.value;
    const double F = problem.F(pt.x, pt.y);
    rep.rows.push_back({"Er0.level", inner.status == InnerStatus::infeasible
                                         ? INFINITY
                                         : std::max(0.0, inner.value - opts.inner.eps_lvl - F)});
  }
  push_vector_rows(rep.rows, "Er1", d.Fx + d.JG.transpose() * rm.alpha - d.Lx.transpose() * rm.beta - d.gx.transpose() * w);
  push_vector_rows(rep.rows, "Er2", d.Fy - d.Ly.transpose() * rm.beta - d.gy.transpose() * w);
  push_vector_rows(rep.rows, "Er3", -d.gy * rm.beta + rm.mu + rm.delta.cwiseProduct(d.g));
  for (Eigen::Index j = 0; j < p; ++j) {
    const std::string k = "[" + std::to_string(j) + "]";
    rep.rows.push_back({"Er4.alpha" + k, std::max(0.0, -rm.alpha[j])});
    rep.rows.push_back({"Er4.G" + k, std::max(0.0, d.G[j])});
    rep.rows.push_back({"Er4.alphaG" + k, std::abs(rm.alpha[j] * d.G[j])});
  }
  for (Eigen::Index i = 0; i < q; ++i) {
    const std::string k = "[" + std::to_string(i) + "]";
    rep.rows.push_back({"Er4.gamma" + k, std::max(0.0, -rm.gamma[i])});
    rep.rows.push_back({"Er4.gammag" + k, std::abs(rm.gamma[i] * d.g[i])});
    rep.rows.push_back({"Er4.mu" + k, std::max(0.0, -rm.mu[i])});
    rep.rows.push_back({"Er4.muu" + k, std::abs(rm.mu[i] * u[i])});
    rep.rows.push_back({"Er5.delta" + k, std::max(0.0, -rm.delta[i])});
    rep.rows.push_back({"Er5.delta_ug" + k, std::abs(rm.delta[i] * (u[i] * d.g[i] + t))});
  }
  finalize(rep);
  return rep;
}

// ---------------------------------------------------------------------------
// Qualification conditions

struct QualificationReport {
  StationarityKind kind = StationarityKind::M;  // which theta condition defines the multiplier cone
  bool A1 = true;
  bool A2 = true;
  bool A3 = true;
  Vector certificate_A1;  // (beta, gamma) of a nonzero ray when A1 fails
  Vector certificate_A2;
  Vector certificate_A3;
  std::vector<ThetaBranch> pattern_A1, pattern_A2, pattern_A3;
  IndexSets index_sets;
  std::size_t patterns = 0;
};

namespace detail {

inline constexpr double kRayTol = 1e-9;

struct RaySearch {
  bool found = false;
  Vector z;
};

// Nonzero point of cone(lp) with |z| <= 1 maximizing +/- (M z)_k for some k.
inline RaySearch find_ray(const LinearProgram& cone, const Matrix& M) {
  for (Eigen::Index k = 0; k < M.rows(); ++k) {
    for (const double sgn : {1.0, -1.0}) {
      LinearProgram lp = cone;
      lp.c = -sgn * M.row(k).transpose();
      const LpResult r = solve_lp(lp);
      if (r.status == LpStatus::optimal && -r.objective > kRayTol) return {true, r.x};
    }
  }
  return {};
}

}  // namespace detail

/// A1 / A2 / A3 for the multiplier cone with the kind's theta condition (M or C).
inline QualificationReport check_qualification_A(const BilevelProblem& problem, const TriplePoint& pt,
                                                 StationarityKind kind = StationarityKind::M,
                                                 const StationarityOptions& opts = {}) {
  using namespace detail;
  if (kind != StationarityKind::M && kind != StationarityKind::C)
    throw UsageError("check_qualification_A: kind must be M or C");
  const auto branches = theta_branches(kind);
  QualificationReport rep;
  rep.kind = kind;
  rep.index_sets = classify_indices(problem, pt, 0.0, opts.eps_act);
  const IndexSets& s = rep.index_sets;
  check_cap(s, opts.pattern_cap, "check_qualification_A");
  const PointDerivatives d(problem, pt);
  const auto n = idx(problem.n()), m = idx(problem.m()), q = idx(problem.q());
  const Eigen::Index nv = m + q;  // beta | gamma

  // Lambda_y: grad_y L^T beta + grad_y g^T gamma = 0 plus the index-set conditions.
  LinearProgram cone_y(nv);
  cone_y.lower.setConstant(-1.0);
  cone_y.upper.setConstant(1.0);
  for (const auto i : s.eta) cone_y.lower[m + idx(i)] = cone_y.upper[m + idx(i)] = 0.0;
  for (Eigen::Index r = 0; r < m; ++r) {
    Vector row(nv);
    row << d.Ly.col(r), d.gy.col(r);
    cone_y.add_eq(row, 0.0);
  }
  auto a_row = [&](std::size_t i) {
    Vector row = Vector::Zero(nv);
    row.head(m) = d.gy.row(idx(i)).transpose();
    return row;
  };
  for (const auto i : s.nu) cone_y.add_eq(a_row(i), 0.0);
  // The x-block map: grad_x L^T beta + grad_x g^T gamma.
  Matrix Mx(n, nv);
  Mx << d.Lx.transpose(), d.gx.transpose();
  const Matrix I = Matrix::Identity(nv, nv);

  auto apply_pattern = [&](LinearProgram lp, const std::vector<ThetaBranch>& pattern) {
    for (std::size_t k = 0; k < s.theta.size(); ++k) {
      const std::size_t i = s.theta[k];
      const Eigen::Index gi = m + idx(i);
      switch (pattern[k]) {
        case ThetaBranch::nonneg:
          lp.lower[gi] = 0.0;
          lp.add_ub(-a_row(i), 0.0);
          break;
        case ThetaBranch::nonpos:
          lp.upper[gi] = 0.0;
          lp.add_ub(a_row(i), 0.0);
          break;
        case ThetaBranch::gamma_zero:
          lp.lower[gi] = lp.upper[gi] = 0.0;
          break;
        case ThetaBranch::a_zero:
          lp.add_eq(a_row(i), 0.0);
          break;
      }
    }
    return lp;
  };

  const std::size_t total = pattern_count(s.theta.size(), branches.size());
  rep.patterns = total;
  for (std::size_t k = 0; k < total; ++k) {
    const auto pattern = decode_pattern(k, s.theta.size(), branches);
    const LinearProgram py = apply_pattern(cone_y, pattern);
    LinearProgram pfull = py;
    for (Eigen::Index r = 0; r < n; ++r) pfull.add_eq(Mx.row(r).transpose(), 0.0);
    if (rep.A1) {
      if (const auto ray = find_ray(pfull, I); ray.found) {
        rep.A1 = false;
        rep.certificate_A1 = ray.z;
        rep.pattern_A1 = pattern;
      }
    }
    if (rep.A2) {
      if (const auto ray = find_ray(py, Mx); ray.found) {
        rep.A2 = false;
        rep.certificate_A2 = ray.z;
        rep.pattern_A2 = pattern;
      }
    }
    if (rep.A3) {
      if (const auto ray = find_ray(py, I); ray.found) {
        rep.A3 = false;
        rep.certificate_A3 = ray.z;
        rep.pattern_A3 = pattern;
      }
    }
  }
  return rep;
}

/// The M-counterparts used by the convergence theory.
inline QualificationReport check_qualification_Am(const BilevelProblem& problem, const TriplePoint& pt,
                                                  const StationarityOptions& opts = {}) {
  return check_qualification_A(problem, pt, StationarityKind::M, opts);
}

enum class Cq1Status { holds, fails, undecided };

inline const char* to_string(Cq1Status s) {
  switch (s) {
    case Cq1Status::holds: return "holds";
    case Cq1Status::fails: return "fails";
    case Cq1Status::undecided: return "undecided";
  }
  return "?";
}

struct Cq1Report {
  Cq1Status status = Cq1Status::holds;
  bool ray_found = false;  // verdict of the ray search at eps_act, also when undecided
  Vector certificate;      // (beta, gamma, mu, delta)
  IndexSets index_sets;
  std::vector<std::string> borderline;  // quantities within (eps_act, 100 eps_act]

  bool holds() const { return status == Cq1Status::holds; }
};

/// Qualification condition of the relaxed problem at (x, y, u) for t > 0.
inline Cq1Report check_cq1(const BilevelProblem& problem, double t, const TriplePoint& pt,
                           const StationarityOptions& opts = {}) {
  using namespace detail;
  if (!(t > 0.0)) throw UsageError("check_cq1: t must be positive");
  Cq1Report rep;
  rep.index_sets = classify_indices(problem, pt, t, opts.eps_act);
  const IndexSets& s = rep.index_sets;
  const PointDerivatives d(problem, pt);
  const auto m = idx(problem.m()), q = idx(problem.q());
  const Vector& u = pt.u;

  const Eigen::Index ob = 0, og = m, om = m + q, od = m + 2 * q, nv = m + 3 * q;
  LinearProgram lp(nv);
  lp.upper.setConstant(1.0);
  lp.lower.head(m).setConstant(-1.0);
  for (Eigen::Index i = 0; i < q; ++i) {
    const auto ui = static_cast<std::size_t>(i);
    if (!IndexSets::contains(s.i_g, ui)) lp.upper[og + i] = 0.0;
    if (!IndexSets::contains(s.i_u, ui)) lp.upper[om + i] = 0.0;
    if (!IndexSets::contains(s.i_ug, ui)) lp.upper[od + i] = 0.0;
  }
  for (Eigen::Index r = 0; r < m; ++r) {
    Vector row = Vector::Zero(nv);
    row.segment(ob, m) = d.Ly.col(r);
    row.segment(og, q) = d.gy.col(r);
    row.segment(od, q) = -d.gy.col(r).cwiseProduct(u);
    lp.add_eq(row, 0.0);
  }
  for (Eigen::Index i = 0; i < q; ++i) {
    Vector row = Vector::Zero(nv);
    row.segment(ob, m) = d.gy.row(i).transpose();
    row[om + i] = -1.0;
    row[od + i] = -d.g[i];
    lp.add_eq(row, 0.0);
  }
  const auto ray = find_ray(lp, Matrix::Identity(nv, nv));
  rep.ray_found = ray.found;
  if (ray.found) rep.certificate = ray.z;

  const double lo = opts.eps_act, hi = 100.0 * opts.eps_act;
  auto band = [&](double v) { return std::abs(v) > lo && std::abs(v) <= hi; };
  for (Eigen::Index i = 0; i < q; ++i) {
    const std::string k = "[" + std::to_string(i) + "]";
    if (band(u[i])) rep.borderline.push_back("u" + k);
    if (band(d.g[i])) rep.borderline.push_back("g" + k);
    if (band(u[i] * d.g[i] + t)) rep.borderline.push_back("ug_plus_t" + k);
  }
  rep.status = !rep.borderline.empty() ? Cq1Status::undecided : (ray.found ? Cq1Status::fails : Cq1Status::holds);
  return rep;
}

}  // namespace pessim
