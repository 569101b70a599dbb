#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace pessim {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Raised when a caller violates an API precondition (bad sizes, bad parameters).
class UsageError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Raised when a point handed to a checker is not feasible for the set it
/// is supposed to belong to.
class InfeasiblePointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised when a checker declines to run, e.g. the biactive set is larger
/// than the sign-pattern enumeration cap.
class CheckerRefusal : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ProblemDims {
  std::size_t n = 0;  // leader
  std::size_t m = 0;  // follower
  std::size_t p = 0;  // upper-level constraints
  std::size_t q = 0;  // lower-level constraints

  void validate() const {
    if (n == 0 || m == 0) throw UsageError("ProblemDims: n and m must be positive");
    if (p == 0 && q == 0) throw UsageError("ProblemDims: p and q cannot both be zero");
  }
};

/// A leader point together with a follower point and lower-level multipliers.
struct TriplePoint {
  Vector x;
  Vector y;
  Vector u;

  /// The follower part (y, u) stacked into one vector of size m + q.
  Vector follower() const {
    Vector z(y.size() + u.size());
    z << y, u;
    return z;
  }

  static TriplePoint from_follower(const Vector& x, const Vector& z, std::size_t m) {
    const auto mi = static_cast<Eigen::Index>(m);
    return TriplePoint{x, z.head(mi), z.tail(z.size() - mi)};
  }
};

/// Axis-aligned box; an empty box (size 0) means "not supplied".
struct Box {
  Vector lower;
  Vector upper;

  bool empty() const { return lower.size() == 0; }
  Eigen::Index size() const { return lower.size(); }

  Vector project(const Vector& v) const {
    if (empty()) return v;
    return v.cwiseMax(lower).cwiseMin(upper);
  }
  bool contains(const Vector& v, double tol) const {
    if (empty()) return true;
    return ((v - lower).array() >= -tol).all() && ((upper - v).array() >= -tol).all();
  }
  double diameter() const { return empty() ? 0.0 : (upper - lower).norm(); }

  static Box uniform(std::size_t dim, double lo, double hi) {
    const auto d = static_cast<Eigen::Index>(dim);
    return Box{Vector::Constant(d, lo), Vector::Constant(d, hi)};
  }
};

inline std::string format_vector(const Vector& v) {
  std::string s = "(";
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (i) s += ", ";
    s += std::to_string(v[i]);
  }
  return s + ")";
}

inline std::vector<double> to_std(const Vector& v) { return {v.data(), v.data() + v.size()}; }

inline Vector from_std(const std::vector<double>& v) {
  return Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
}

}  // namespace pessim
