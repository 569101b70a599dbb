#pragma once

// Plot-ready CSV traces and JSON reports. CSV numbers use %.17g; every file
// carries a schema tag (a leading "# schema=..." line in CSV, a "schema" key
// in JSON).

#include "pessim/setvalued.hpp"
#include "pessim/stationarity.hpp"

#include <json.hpp>

#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

namespace pessim {

inline constexpr const char* kTraceSchema = "pessim.trace/1";
inline constexpr const char* kArgmaxSchema = "pessim.argmax/1";
inline constexpr const char* kExcessSchema = "pessim.excess/1";
inline constexpr const char* kReportSchema = "pessim.report/1";

using Json = nlohmann::ordered_json;

inline std::string fmt17(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline double parse_double(const std::string& s) {
  if (s == "inf") return INFINITY;
  if (s == "-inf") return -INFINITY;
  if (s == "nan") return NAN;
  std::size_t pos = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &pos);
  } catch (const std::exception&) {
    throw UsageError("not a number: '" + s + "'");
  }
  if (pos != s.size()) throw UsageError("not a number: '" + s + "'");
  return v;
}

/// Comma- or whitespace-separated list of numbers.
inline Vector parse_vector(const std::string& s) {
  std::string t = s;
  for (auto& c : t)
    if (c == ',' || c == ';') c = ' ';
  std::istringstream in(t);
  std::vector<double> v;
  std::string tok;
  while (in >> tok) v.push_back(parse_double(tok));
  if (v.empty()) throw UsageError("empty vector '" + s + "'");
  return from_std(v);
}

namespace detail {

inline std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (const char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

inline void expect_schema(std::istream& in, const std::string& schema) {
  std::string line;
  if (!std::getline(in, line) || line != "# schema=" + schema)
    throw UsageError("expected a '# schema=" + schema + "' first line");
}

inline InnerStatus parse_inner_status(const std::string& s) {
  if (s == "solved") return InnerStatus::solved;
  if (s == "budget_exhausted") return InnerStatus::budget_exhausted;
  if (s == "infeasible") return InnerStatus::infeasible;
  throw UsageError("unknown inner status '" + s + "'");
}

}  // namespace detail

// ---------------------------------------------------------------------------
// CSV

/// Columns: k, t, x0..x{n-1}, psi, inner_status, outer_evals, inner_evals,
/// final_mesh, argmax_size, argmax_residual.
inline void write_trace_csv(std::ostream& os, const RunTrace& trace) {
  const Eigen::Index n = trace.records.empty() ? 0 : trace.records.front().x.size();
  os << "# schema=" << kTraceSchema << "\n";
  os << "k,t";
  for (Eigen::Index i = 0; i < n; ++i) os << ",x" << i;
  os << ",psi,inner_status,outer_evals,inner_evals,final_mesh,argmax_size,argmax_residual\n";
  for (const auto& r : trace.records) {
    os << r.k << "," << fmt17(r.t);
    for (Eigen::Index i = 0; i < n; ++i) os << "," << fmt17(r.x[i]);
    os << "," << fmt17(r.psi) << "," << to_string(r.inner_status) << "," << r.outer_evals << "," << r.inner_evals << ","
       << fmt17(r.final_mesh) << "," << r.argmax.size() << "," << fmt17(r.argmax_residual) << "\n";
  }
}

/// Columns: k, index, z0..z{m+q-1} with z = (y, u).
inline void write_argmax_csv(std::ostream& os, const RunTrace& trace) {
  Eigen::Index d = 0;
  for (const auto& r : trace.records)
    if (!r.argmax.empty()) d = r.argmax.points.front().size();
  os << "# schema=" << kArgmaxSchema << "\n";
  os << "k,index";
  for (Eigen::Index i = 0; i < d; ++i) os << ",z" << i;
  os << "\n";
  for (const auto& r : trace.records)
    for (std::size_t j = 0; j < r.argmax.points.size(); ++j) {
      os << r.k << "," << j;
      for (Eigen::Index i = 0; i < d; ++i) os << "," << fmt17(r.argmax.points[j][i]);
      os << "\n";
    }
}

/// Inverse of write_trace_csv; argmax samples are left empty.
inline RunTrace read_trace_csv(std::istream& in) {
  detail::expect_schema(in, kTraceSchema);
  std::string line;
  if (!std::getline(in, line)) throw UsageError("trace: missing header");
  const auto header = detail::split_csv(line);
  if (header.size() < 9 || header[0] != "k" || header[1] != "t") throw UsageError("trace: malformed header");
  const std::size_t n = header.size() - 9;
  RunTrace trace;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto f = detail::split_csv(line);
    if (f.size() != header.size()) throw UsageError("trace: row with " + std::to_string(f.size()) + " fields");
    TraceRecord r;
    r.k = static_cast<std::size_t>(parse_double(f[0]));
    r.t = parse_double(f[1]);
    r.x = Vector(static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i) r.x[static_cast<Eigen::Index>(i)] = parse_double(f[2 + i]);
    r.psi = parse_double(f[2 + n]);
    r.inner_status = detail::parse_inner_status(f[3 + n]);
    r.outer_evals = static_cast<std::size_t>(parse_double(f[4 + n]));
    r.inner_evals = static_cast<std::size_t>(parse_double(f[5 + n]));
    r.final_mesh = parse_double(f[6 + n]);
    r.argmax_residual = parse_double(f[8 + n]);
    trace.records.push_back(std::move(r));
  }
  return trace;
}

/// Attaches the samples of an argmax CSV to the matching records.
inline void read_argmax_csv(std::istream& in, RunTrace& trace) {
  detail::expect_schema(in, kArgmaxSchema);
  std::string line;
  if (!std::getline(in, line)) throw UsageError("argmax: missing header");
  const auto header = detail::split_csv(line);
  if (header.size() < 2 || header[0] != "k" || header[1] != "index") throw UsageError("argmax: malformed header");
  const std::size_t d = header.size() - 2;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto f = detail::split_csv(line);
    if (f.size() != header.size()) throw UsageError("argmax: row with " + std::to_string(f.size()) + " fields");
    const auto k = static_cast<std::size_t>(parse_double(f[0]));
    Vector z(static_cast<Eigen::Index>(d));
    for (std::size_t i = 0; i < d; ++i) z[static_cast<Eigen::Index>(i)] = parse_double(f[2 + i]);
    bool placed = false;
    for (auto& r : trace.records)
      if (r.k == k) {
        r.argmax.points.push_back(z);
        placed = true;
        break;
      }
    if (!placed) throw UsageError("argmax: sample for k=" + std::to_string(k) + " has no trace row");
  }
}

/// Columns: k, t, x0..x{n-1}, excess, flagged.
inline void write_excess_csv(std::ostream& os, const ExcessSeries& s) {
  const Eigen::Index n = s.entries.empty() ? 0 : s.entries.front().x.size();
  os << "# schema=" << kExcessSchema << "\n";
  os << "k,t";
  for (Eigen::Index i = 0; i < n; ++i) os << ",x" << i;
  os << ",excess,flagged\n";
  for (const auto& e : s.entries) {
    os << e.k << "," << fmt17(e.t);
    for (Eigen::Index i = 0; i < n; ++i) os << "," << fmt17(e.x[i]);
    os << "," << e.excess.str() << "," << (e.flagged ? 1 : 0) << "\n";
  }
}

// ---------------------------------------------------------------------------
// JSON

inline Json to_json(const Vector& v) {
  Json a = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (std::isfinite(v[i]))
      a.push_back(v[i]);
    else
      a.push_back(fmt17(v[i]));
  }
  return a;
}

inline Json number_or_string(double v) { return std::isfinite(v) ? Json(v) : Json(fmt17(v)); }

inline Vector vector_from_json(const Json& j, const std::string& what) {
  if (!j.is_array()) throw UsageError(what + ": expected an array of numbers");
  Vector v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    const auto& e = j[i];
    if (e.is_number())
      v[static_cast<Eigen::Index>(i)] = e.get<double>();
    else if (e.is_string())
      v[static_cast<Eigen::Index>(i)] = parse_double(e.get<std::string>());
    else
      throw UsageError(what + ": expected an array of numbers");
  }
  return v;
}

inline Json to_json(const IndexSets& s) {
  return Json{{"eta", s.eta}, {"theta", s.theta}, {"nu", s.nu}, {"I_G", s.i_G},
              {"I_u", s.i_u}, {"I_g", s.i_g},     {"I_ug", s.i_ug}, {"eps_act", s.eps_act}};
}

inline Json to_json(const SampledSet& s) {
  Json pts = Json::array();
  for (const auto& p : s.points) pts.push_back(to_json(p));
  return Json{{"meta", s.meta}, {"points", pts}};
}

inline Json to_json(const InnerSolveResult& r) {
  return Json{{"value", number_or_string(r.value)},
              {"status", to_string(r.status)},
              {"evals", r.evals},
              {"feasible_starts", r.feasible_starts},
              {"argmax", to_json(r.argmax)}};
}

inline Json to_json(const Multipliers& m) {
  return Json{{"alpha", to_json(m.alpha)}, {"beta", to_json(m.beta)}, {"gamma", to_json(m.gamma)}};
}

inline Json to_json(const RelaxedMultipliers& m) {
  return Json{{"alpha", to_json(m.alpha)}, {"beta", to_json(m.beta)}, {"gamma", to_json(m.gamma)},
              {"mu", to_json(m.mu)},       {"delta", to_json(m.delta)}};
}

inline Json to_json(const StationarityReport& r) {
  Json rows = Json::array();
  for (const auto& row : r.rows) rows.push_back(Json{{"name", row.name}, {"value", number_or_string(row.value)}});
  Json pattern = Json::array();
  for (const auto b : r.sign_pattern) pattern.push_back(to_string(b));
  Json j{{"kind", to_string(r.kind)},
         {"pass", r.pass},
         {"residual_inf", number_or_string(r.residual_inf)},
         {"tol", r.tol},
         {"flagged", r.flagged},
         {"multipliers", r.relaxed ? to_json(*r.relaxed) : to_json(r.multipliers)},
         {"sign_pattern", pattern},
         {"index_sets", to_json(r.index_sets)},
         {"rows", rows}};
  if (r.psi_reference) j["psi_reference"] = number_or_string(*r.psi_reference);
  return j;
}

inline Json to_json(const QualificationReport& r) {
  auto cert = [](bool holds, const Vector& c) { return holds ? Json(nullptr) : to_json(c); };
  return Json{{"kind", to_string(r.kind)},
              {"A1", r.A1},
              {"A2", r.A2},
              {"A3", r.A3},
              {"certificate_A1", cert(r.A1, r.certificate_A1)},
              {"certificate_A2", cert(r.A2, r.certificate_A2)},
              {"certificate_A3", cert(r.A3, r.certificate_A3)},
              {"patterns", r.patterns},
              {"index_sets", to_json(r.index_sets)}};
}

inline Json to_json(const Cq1Report& r) {
  return Json{{"status", to_string(r.status)},
              {"ray_found", r.ray_found},
              {"certificate", r.ray_found ? to_json(r.certificate) : Json(nullptr)},
              {"borderline", r.borderline},
              {"index_sets", to_json(r.index_sets)}};
}

inline Json to_json(const GradientCheckReport& r) {
  Json prov = Json::array();
  for (const auto& p : r.providers)
    prov.push_back(Json{{"provider", p.provider}, {"max_rel_error", number_or_string(p.max_rel_error)}, {"finite", p.finite}});
  return Json{{"max_rel_error", number_or_string(r.max_error())}, {"all_finite", r.all_finite()}, {"providers", prov}};
}

inline Json to_json(const ExcessSeries& s) {
  Json entries = Json::array();
  for (const auto& e : s.entries)
    entries.push_back(Json{{"k", e.k}, {"t", e.t}, {"x", to_json(e.x)}, {"excess", e.excess.is_infinite() ? Json("inf") : Json(e.excess.value())}, {"flagged", e.flagged}});
  return Json{{"limit_estimate", s.limit_estimate.is_infinite() ? Json("inf") : Json(s.limit_estimate.value())},
              {"note", s.note},
              {"reference", to_json(s.reference)},
              {"entries", entries}};
}

/// Wraps a payload with the schema tag.
inline Json report(const std::string& kind, Json payload) {
  Json j{{"schema", kReportSchema}, {"report", kind}};
  for (auto it = payload.begin(); it != payload.end(); ++it) j[it.key()] = it.value();
  return j;
}

}  // namespace pessim
