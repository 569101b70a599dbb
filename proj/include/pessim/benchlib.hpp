#pragma once

// Built-in benchmark problems. The two one-dimensional examples carry closed
// forms for psi, psi^t, the relaxed argmax set and the relaxed KKT set;
// synthetic2d exercises higher dimensions against the grid oracle only.

#include "pessim/maxmin.hpp"

#include <cmath>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace pessim {

struct KnownOptimum {
  Vector x;
  double value = 0.0;
};

/// Closed-form companions of a benchmark. Generators take a resolution
/// (points per continuous parameter) and return an empty set when the
/// oracle has no closed form.
struct AnalyticOracle {
  std::function<double(const Vector&)> psi_p;
  std::function<double(const Vector&, double)> psi_p_t;
  std::function<SampledSet(const Vector&, double, std::size_t)> s_p_t;
  std::function<SampledSet(const Vector&, double, std::size_t)> d_set;
  std::optional<KnownOptimum> known_optimum;

  bool has_closed_form() const { return static_cast<bool>(psi_p_t); }
};

struct Benchmark {
  BilevelProblem problem;
  AnalyticOracle oracle;
  Vector default_x0;
  /// Box for (y, u) used by grid sampling and the brute-force oracle.
  Box follower_grid_box;
  /// Grid for brute_force_psi_t at (x, t) with `resolution` nodes per axis.
  std::function<GridSpec(const Vector&, double, std::size_t)> crosscheck_grid;
};

namespace detail {

inline Vector vec1(double a) { return Vector::Constant(1, a); }
inline Vector vec2(double a, double b) {
  Vector v(2);
  v << a, b;
  return v;
}
inline Vector vec3(double a, double b, double c) {
  Vector v(3);
  v << a, b, c;
  return v;
}
inline Matrix mat1(double a) { return Matrix::Constant(1, 1, a); }

inline GridSpec box_grid(const Box& b, std::size_t res) {
  GridSpec g;
  for (Eigen::Index i = 0; i < b.size(); ++i) g.axes.push_back({b.lower[i], b.upper[i], b.lower[i] < b.upper[i] ? res : 1});
  return g;
}

// Both one-dimensional examples share f = xy, K(x) = [0, 1] with g = (-y, y - 1),
// hence L = x - u1 + u2 and u2 = u1 - x on D^t(x).
inline ProblemFunctions xy_follower(std::function<double(const Vector&, const Vector&)> F,
                                    std::function<PartialGradient(const Vector&, const Vector&)> grad_F) {
  ProblemFunctions fns;
  fns.F = std::move(F);
  fns.grad_F = std::move(grad_F);
  fns.f = [](const Vector& x, const Vector& y) { return x[0] * y[0]; };
  fns.grad_f = [](const Vector& x, const Vector& y) { return PartialGradient{vec1(y[0]), vec1(x[0])}; };
  fns.g = [](const Vector&, const Vector& y) { return vec2(-y[0], y[0] - 1.0); };
  fns.jac_g = [](const Vector&, const Vector&) {
    Matrix dy(2, 1);
    dy << -1.0, 1.0;
    return PartialJacobian{Matrix::Zero(2, 1), dy};
  };
  fns.hess_f_yx = [](const Vector&, const Vector&) { return mat1(1.0); };
  fns.hess_f_yy = [](const Vector&, const Vector&) { return mat1(0.0); };
  fns.hess_g_yx = [](const Vector&, const Vector&) { return std::vector<Matrix>(2, mat1(0.0)); };
  fns.hess_g_yy = [](const Vector&, const Vector&) { return std::vector<Matrix>(2, mat1(0.0)); };
  return fns;
}

inline void interval_leader(ProblemFunctions& fns, double lo, double hi) {
  fns.G = [lo, hi](const Vector& x) { return vec2(lo - x[0], x[0] - hi); };
  fns.jac_G = [](const Vector&) {
    Matrix J(2, 1);
    J << -1.0, 1.0;
    return J;
  };
}

inline double u1_star(double x, double t) { return 0.5 * (x + 2.0 * t + std::sqrt(x * x + 4.0 * t * t)); }

// D^t(x) for the xy follower: u1 in [max(0, x), u1*], and for each u1 the
// y-interval [max(0, 1 - t/(u1 - x)), min(1, t/u1)] with u2 = u1 - x.
inline SampledSet xy_d_set(double x, double t, std::size_t res) {
  SampledSet s;
  s.meta = "closed form D^t(x) res=" + std::to_string(res);
  const double lo1 = std::max(0.0, x);
  const double hi1 = t > 0.0 ? u1_star(x, t) : lo1;
  const std::size_t n1 = hi1 > lo1 ? std::max<std::size_t>(res, 2) : 1;
  for (std::size_t a = 0; a < n1; ++a) {
    const double u1 = n1 > 1 ? lo1 + (hi1 - lo1) * static_cast<double>(a) / static_cast<double>(n1 - 1) : lo1;
    const double u2 = u1 - x;
    const double ylo = u2 > 0.0 ? std::max(0.0, 1.0 - t / u2) : 0.0;
    const double yhi = u1 > 0.0 ? std::min(1.0, t / u1) : 1.0;
    if (ylo > yhi) continue;
    const std::size_t ny = yhi > ylo ? std::max<std::size_t>(res, 2) : 1;
    for (std::size_t b = 0; b < ny; ++b) {
      const double y = ny > 1 ? ylo + (yhi - ylo) * static_cast<double>(b) / static_cast<double>(ny - 1) : ylo;
      s.insert(vec3(y, u1, u2));
    }
  }
  return s;
}

// Segment {(1, (u1, u1 - x)) : a <= u1 <= b}.
inline SampledSet top_segment(double x, double a, double b, std::size_t res) {
  SampledSet s;
  const std::size_t n = b > a ? std::max<std::size_t>(res, 2) : 1;
  for (std::size_t k = 0; k < n; ++k) {
    const double u1 = n > 1 ? a + (b - a) * static_cast<double>(k) / static_cast<double>(n - 1) : a;
    s.insert(vec3(1.0, u1, u1 - x));
  }
  return s;
}

// Relaxed argmax of max y over D^t(x) for x >= 0.
inline SampledSet xy_argmax_nonneg(double x, double t, std::size_t res) {
  SampledSet s;
  if (t == 0.0) {
    s.insert(x > 0.0 ? vec3(0.0, x, 0.0) : vec3(1.0, 0.0, 0.0));
  } else if (x == 0.0) {
    s = top_segment(0.0, 0.0, t, res);
  } else if (t <= x) {
    s.insert(vec3(t / x, x, 0.0));
  } else {
    s = top_segment(x, x, t, res);
  }
  return s;
}

inline GridSpec xy_crosscheck_grid(double x, std::size_t res) {
  // The slice u2 = max(0, -x) contains a maximizer on every branch.
  GridSpec g;
  g.axes = {{0.0, 1.0, res}, {0.0, 1.5, res}, {std::max(0.0, -x), std::max(0.0, -x), 1}};
  return g;
}

}  // namespace detail

/// F = y, f = xy, K(x) = [0, 1], X = [0, 1].
inline Benchmark make_example1() {
  using namespace detail;
  auto fns = xy_follower([](const Vector&, const Vector& y) { return y[0]; },
                         [](const Vector&, const Vector&) { return PartialGradient{vec1(0.0), vec1(1.0)}; });
  interval_leader(fns, 0.0, 1.0);
  BilevelProblem problem("example1", ProblemDims{1, 1, 2, 2}, std::move(fns));
  problem.set_leader_box(Box::uniform(1, 0.0, 1.0)).set_follower_box(Box::uniform(1, 0.0, 1.0));

  AnalyticOracle o;
  o.psi_p = [](const Vector& x) { return x[0] == 0.0 ? 1.0 : 0.0; };
  o.psi_p_t = [](const Vector& x, double t) {
    if (t == 0.0) return x[0] == 0.0 ? 1.0 : 0.0;
    return t <= x[0] ? t / x[0] : 1.0;
  };
  o.s_p_t = [](const Vector& x, double t, std::size_t res) { return xy_argmax_nonneg(x[0], t, res); };
  o.d_set = [](const Vector& x, double t, std::size_t res) { return xy_d_set(x[0], t, res); };
  // Every x in (0, 1] is optimal with value 0; x = 1 is the point the relaxed minimizers approach.
  o.known_optimum = KnownOptimum{vec1(1.0), 0.0};

  Benchmark b{std::move(problem), std::move(o), vec1(0.5), Box{vec3(0.0, 0.0, 0.0), vec3(1.0, 2.0, 2.0)}, {}};
  b.crosscheck_grid = [](const Vector& x, double, std::size_t res) { return xy_crosscheck_grid(x[0], res); };
  return b;
}

/// F = x + y, f = xy, K(x) = [0, 1], X = [-1, 1].
inline Benchmark make_example2() {
  using namespace detail;
  auto fns = xy_follower([](const Vector& x, const Vector& y) { return x[0] + y[0]; },
                         [](const Vector&, const Vector&) { return PartialGradient{vec1(1.0), vec1(1.0)}; });
  interval_leader(fns, -1.0, 1.0);
  BilevelProblem problem("example2", ProblemDims{1, 1, 2, 2}, std::move(fns));
  problem.set_leader_box(Box::uniform(1, -1.0, 1.0)).set_follower_box(Box::uniform(1, 0.0, 1.0));

  AnalyticOracle o;
  o.psi_p = [](const Vector& x) { return x[0] > 0.0 ? x[0] : x[0] + 1.0; };
  o.psi_p_t = [](const Vector& x, double t) {
    if (t == 0.0) return x[0] > 0.0 ? x[0] : x[0] + 1.0;
    return t <= x[0] ? x[0] + t / x[0] : x[0] + 1.0;
  };
  o.s_p_t = [](const Vector& x, double t, std::size_t res) {
    if (x[0] >= 0.0) return xy_argmax_nonneg(x[0], t, res);
    return top_segment(x[0], 0.0, t, res);
  };
  o.d_set = [](const Vector& x, double t, std::size_t res) { return xy_d_set(x[0], t, res); };
  o.known_optimum = KnownOptimum{vec1(-1.0), 0.0};

  Benchmark b{std::move(problem), std::move(o), vec1(0.5), Box{vec3(0.0, 0.0, 0.0), vec3(1.0, 2.0, 2.0)}, {}};
  b.crosscheck_grid = [](const Vector& x, double, std::size_t res) { return xy_crosscheck_grid(x[0], res); };
  return b;
}

/// n = m = 2, quadratic f = 1/2 (y1 - x1)^2 + x2 y2, linear g = (-y2, y2 - 1),
/// X = [-1, 1]^2, F = (y1 - 1/2)^2 + y2 + (x2 - 1/2)^2.
inline Benchmark make_synthetic2d() {
  using namespace detail;
  ProblemFunctions fns;
  fns.F = [](const Vector& x, const Vector& y) {
    return (y[0] - 0.5) * (y[0] - 0.5) + y[1] + (x[1] - 0.5) * (x[1] - 0.5);
  };
  fns.grad_F = [](const Vector& x, const Vector& y) {
    return PartialGradient{vec2(0.0, 2.0 * (x[1] - 0.5)), vec2(2.0 * (y[0] - 0.5), 1.0)};
  };
  fns.f = [](const Vector& x, const Vector& y) { return 0.5 * (y[0] - x[0]) * (y[0] - x[0]) + x[1] * y[1]; };
  fns.grad_f = [](const Vector& x, const Vector& y) {
    return PartialGradient{vec2(-(y[0] - x[0]), y[1]), vec2(y[0] - x[0], x[1])};
  };
  fns.g = [](const Vector&, const Vector& y) { return vec2(-y[1], y[1] - 1.0); };
  fns.jac_g = [](const Vector&, const Vector&) {
    Matrix dy(2, 2);
    dy << 0.0, -1.0, 0.0, 1.0;
    return PartialJacobian{Matrix::Zero(2, 2), dy};
  };
  fns.G = [](const Vector& x) {
    Vector G(4);
    G << -1.0 - x[0], x[0] - 1.0, -1.0 - x[1], x[1] - 1.0;
    return G;
  };
  fns.jac_G = [](const Vector&) {
    Matrix J(4, 2);
    J << -1, 0, 1, 0, 0, -1, 0, 1;
    return J;
  };
  fns.hess_f_yx = [](const Vector&, const Vector&) {
    Matrix H(2, 2);
    H << -1, 0, 0, 1;
    return H;
  };
  fns.hess_f_yy = [](const Vector&, const Vector&) {
    Matrix H(2, 2);
    H << 1, 0, 0, 0;
    return H;
  };
  fns.hess_g_yx = [](const Vector&, const Vector&) { return std::vector<Matrix>(2, Matrix::Zero(2, 2)); };
  fns.hess_g_yy = [](const Vector&, const Vector&) { return std::vector<Matrix>(2, Matrix::Zero(2, 2)); };
  BilevelProblem problem("synthetic2d", ProblemDims{2, 2, 4, 2}, std::move(fns));
  problem.set_leader_box(Box::uniform(2, -1.0, 1.0)).set_follower_box(Box{vec2(-1.0, 0.0), vec2(1.0, 1.0)});

  Vector zlo(4), zhi(4);
  zlo << -1.0, 0.0, 0.0, 0.0;
  zhi << 1.0, 1.0, 2.0, 2.0;
  Benchmark b{std::move(problem), AnalyticOracle{}, vec2(0.5, 0.5), Box{zlo, zhi}, {}};
  const Box zbox = b.follower_grid_box;
  b.crosscheck_grid = [zbox](const Vector&, double, std::size_t res) { return box_grid(zbox, res); };
  return b;
}

/// n = m = q = 1: f = 1/2 y^2 - xy, g = -y, F = 2y - x, X = [-1, 1].
/// psi^t(x) = sqrt(x^2 + 4t) and psi(x) = |x|; (0, 0, 0) is biactive.
inline Benchmark make_biactive1d() {
  using namespace detail;
  ProblemFunctions fns;
  fns.F = [](const Vector& x, const Vector& y) { return 2.0 * y[0] - x[0]; };
  fns.grad_F = [](const Vector&, const Vector&) { return PartialGradient{vec1(-1.0), vec1(2.0)}; };
  fns.f = [](const Vector& x, const Vector& y) { return 0.5 * y[0] * y[0] - x[0] * y[0]; };
  fns.grad_f = [](const Vector& x, const Vector& y) { return PartialGradient{vec1(-y[0]), vec1(y[0] - x[0])}; };
  fns.g = [](const Vector&, const Vector& y) { return vec1(-y[0]); };
  fns.jac_g = [](const Vector&, const Vector&) { return PartialJacobian{mat1(0.0), mat1(-1.0)}; };
  interval_leader(fns, -1.0, 1.0);
  fns.hess_f_yx = [](const Vector&, const Vector&) { return mat1(-1.0); };
  fns.hess_f_yy = [](const Vector&, const Vector&) { return mat1(1.0); };
  fns.hess_g_yx = [](const Vector&, const Vector&) { return std::vector<Matrix>(1, mat1(0.0)); };
  fns.hess_g_yy = [](const Vector&, const Vector&) { return std::vector<Matrix>(1, mat1(0.0)); };
  BilevelProblem problem("biactive1d", ProblemDims{1, 1, 2, 1}, std::move(fns));
  problem.set_leader_box(Box::uniform(1, -1.0, 1.0)).set_follower_box(Box::uniform(1, 0.0, 2.0));

  AnalyticOracle o;
  o.psi_p = [](const Vector& x) { return std::abs(x[0]); };
  o.psi_p_t = [](const Vector& x, double t) { return std::sqrt(x[0] * x[0] + 4.0 * t); };
  o.s_p_t = [](const Vector& x, double t, std::size_t) {
    SampledSet s;
    const double y = 0.5 * (x[0] + std::sqrt(x[0] * x[0] + 4.0 * t));
    s.insert(vec2(y, y - x[0]));
    return s;
  };
  o.known_optimum = KnownOptimum{vec1(0.0), 0.0};

  Benchmark b{std::move(problem), std::move(o), vec1(0.5), Box{vec2(0.0, 0.0), vec2(2.0, 2.0)}, {}};
  const Box zbox = b.follower_grid_box;
  b.crosscheck_grid = [zbox](const Vector&, double, std::size_t res) { return detail::box_grid(zbox, res); };
  return b;
}

inline std::vector<std::string> benchmark_names() { return {"example1", "example2", "synthetic2d", "biactive1d"}; }

inline Benchmark make_benchmark(const std::string& name) {
  if (name == "example1") return make_example1();
  if (name == "example2") return make_example2();
  if (name == "synthetic2d") return make_synthetic2d();
  if (name == "biactive1d") return make_biactive1d();
  throw UsageError("unknown problem '" + name + "'");
}

struct CrosscheckEntry {
  Vector x;
  double t = 0.0;
  double oracle = 0.0;
  double brute = -INFINITY;
  double gap = INFINITY;
};

struct CrosscheckReport {
  std::vector<CrosscheckEntry> entries;
  double max_gap = 0.0;
  /// Largest excess of the brute-force maximizer over the oracle's argmax set.
  double max_argmax_excess = 0.0;
};

/// Compares the closed-form psi^t with brute_force_psi_t at every (x, t) pair.
inline CrosscheckReport oracle_crosscheck(const std::string& example_id, const std::vector<Vector>& xs,
                                          const std::vector<double>& ts, std::size_t resolution = 400) {
  const Benchmark b = make_benchmark(example_id);
  if (!b.oracle.has_closed_form()) throw UsageError("oracle_crosscheck: '" + example_id + "' has no closed form");
  CrosscheckReport rep;
  for (const auto& x : xs) {
    for (const double t : ts) {
      CrosscheckEntry e{x, t, b.oracle.psi_p_t(x, t)};
      const auto bf = brute_force_psi_t(b.problem, x, t, b.crosscheck_grid(x, t, resolution));
      e.brute = bf.value;
      e.gap = bf.feasible ? std::abs(e.oracle - bf.value) : INFINITY;
      rep.max_gap = std::max(rep.max_gap, e.gap);
      if (bf.feasible && b.oracle.s_p_t) {
        const SampledSet s = b.oracle.s_p_t(x, t, 200);
        double best = INFINITY;
        for (const auto& p : s.points) best = std::min(best, (p - bf.best).norm());
        rep.max_argmax_excess = std::max(rep.max_argmax_excess, best);
      }
      rep.entries.push_back(std::move(e));
    }
  }
  return rep;
}

}  // namespace pessim
