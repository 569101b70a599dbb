#pragma once

// Coordinate (compass) pattern search with box projection. Every poll of a
// mesh iteration is evaluated before the move is chosen, so the accepted
// point does not depend on evaluation order.

#include "pessim/types.hpp"

#include <cmath>
#include <cstddef>
#include <map>
#include <optional>
#include <vector>

namespace pessim {

inline bool lexicographic_less(const Vector& a, const Vector& b) {
  for (Eigen::Index i = 0; i < std::min(a.size(), b.size()); ++i) {
    if (a[i] < b[i]) return true;
    if (a[i] > b[i]) return false;
  }
  return a.size() < b.size();
}

struct PatternSearchOptions {
  double initial_mesh = 0.25;
  double mesh_tol = 1e-5;
  double decrease_tol = 1e-10;
  std::size_t max_evals = 100000;
  std::optional<double> target;  // stop as soon as a value <= target is found
  Box box;                       // projection box; empty = unconstrained
};

struct PatternSearchResult {
  Vector x;
  double value = INFINITY;
  std::size_t evals = 0;
  double final_mesh = 0.0;
  bool converged = false;  // mesh fell below mesh_tol
};

/// Minimizes objective (non-finite values count as +inf) from x0.
template <class Objective>
PatternSearchResult pattern_search(Objective&& objective, const Vector& x0, const PatternSearchOptions& opts) {
  struct Key {
    std::vector<double> v;
    bool operator<(const Key& o) const { return v < o.v; }
  };
  std::map<Key, double> cache;
  PatternSearchResult res;
  auto eval = [&](const Vector& x) {
    Key k{to_std(x)};
    if (auto it = cache.find(k); it != cache.end()) return it->second;
    double v = objective(x);
    if (!std::isfinite(v)) v = INFINITY;
    ++res.evals;
    cache.emplace(std::move(k), v);
    return v;
  };

  Vector xc = opts.box.project(x0);
  double fc = eval(xc);
  double mesh = opts.initial_mesh;
  const Eigen::Index n = xc.size();
  auto reached_target = [&] { return opts.target && fc <= *opts.target; };

  while (mesh >= opts.mesh_tol && res.evals < opts.max_evals && !reached_target()) {
    Vector best_x = xc;
    double best_f = INFINITY;
    bool any = false;
    for (Eigen::Index i = 0; i < n; ++i) {
      for (const double dir : {1.0, -1.0}) {
        Vector xp = xc;
        xp[i] += dir * mesh;
        xp = opts.box.project(xp);
        if (xp == xc) continue;
        if (res.evals >= opts.max_evals && !cache.count(Key{to_std(xp)})) continue;
        const double fp = eval(xp);
        if (!any || fp < best_f || (fp == best_f && lexicographic_less(xp, best_x))) {
          best_f = fp;
          best_x = xp;
          any = true;
        }
      }
    }
    if (any && best_f < fc - opts.decrease_tol) {
      xc = best_x;
      fc = best_f;
    } else {
      mesh *= 0.5;
    }
  }
  res.x = xc;
  res.value = fc;
  res.final_mesh = mesh;
  res.converged = mesh < opts.mesh_tol;
  return res;
}

}  // namespace pessim
