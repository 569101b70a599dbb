// Command-line front end: solve, eval, check, diagnose, gradcheck.
//
// Exit codes: 0 success, 1 usage, 2 infeasibility, 3 checker refusal.

#include "pessim/pessim.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <string>

namespace {

using namespace pessim;
namespace fs = std::filesystem;

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitInfeasible = 2;
constexpr int kExitRefusal = 3;

struct CommonOpts {
  std::string problem;
  std::uint64_t seed = 0;
  std::size_t starts = 32;
  double eps_lvl = 1e-4;
  double feas_tol = kDefaultFeasTol;
  std::size_t threads = 0;

  InnerConfig inner() const {
    InnerConfig c;
    c.seed = seed;
    c.starts = starts;
    c.eps_lvl = eps_lvl;
    c.feas_tol = feas_tol;
    c.threads = threads;
    return c;
  }
};

void add_common(CLI::App* sub, CommonOpts& o) {
  sub->add_option("--problem", o.problem, "Benchmark id")->required()->check(CLI::IsMember(benchmark_names()));
  sub->add_option("--seed", o.seed, "Random seed");
  sub->add_option("--starts", o.starts, "Inner multistart count")->check(CLI::PositiveNumber);
  sub->add_option("--eps-lvl", o.eps_lvl, "Argmax level tolerance")->check(CLI::NonNegativeNumber);
  sub->add_option("--feas-tol", o.feas_tol, "Feasibility tolerance")->check(CLI::PositiveNumber);
  sub->add_option("--threads", o.threads, "Worker threads (0: PESSIM_THREADS or hardware)");
}

void print(const Json& j) { std::cout << j.dump(2) << "\n"; }

Vector parse_dim(const std::string& s, std::size_t n, const char* what) {
  const Vector v = parse_vector(s);
  if (static_cast<std::size_t>(v.size()) != n)
    throw UsageError(std::string(what) + " must have " + std::to_string(n) + " components");
  return v;
}

Json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open '" + path + "'");
  try {
    return Json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw UsageError("'" + path + "' is not valid JSON: " + e.what());
  }
}

// ---------------------------------------------------------------------------

struct SolveOpts {
  CommonOpts common;
  double t0 = 1.0;
  double rho = 0.5;
  double t_min = 1e-4;
  std::size_t max_iters = 100;
  double x_tol = 0.0;
  std::string x0;
  std::string out = ".";
  std::string check;
  std::size_t outer_max_evals = 2000;
  double mesh_tol = 1e-5;
};

int cmd_solve(const SolveOpts& o) {
  const Benchmark b = make_benchmark(o.common.problem);
  RelaxationParams p;
  p.t0 = o.t0;
  p.rho = o.rho;
  p.t_min = o.t_min;
  p.max_outer_iters = o.max_iters;
  p.x_tol = o.x_tol;
  p.seed = o.common.seed;
  p.inner = o.common.inner();
  p.outer.max_evals = o.outer_max_evals;
  p.outer.mesh_tol = o.mesh_tol;
  const Vector x0 = o.x0.empty() ? b.default_x0 : parse_dim(o.x0, b.problem.n(), "--x0");
  std::optional<StationarityKind> kind;
  if (!o.check.empty()) {
    kind = parse_kind(o.check);
    if (*kind == StationarityKind::relaxed) throw UsageError("--check takes C, M or S");
  }

  const RunTrace trace = scholtes_solve(b.problem, p, x0);

  fs::create_directories(o.out);
  {
    std::ofstream f(fs::path(o.out) / "trace.csv");
    write_trace_csv(f, trace);
  }
  {
    std::ofstream f(fs::path(o.out) / "argmax.csv");
    write_argmax_csv(f, trace);
  }
  Json summary{{"problem", o.common.problem},
               {"terminal", to_string(trace.terminal)},
               {"records", trace.records.size()},
               {"seed", o.common.seed}};
  if (!trace.failure_reason.empty()) summary["failure_reason"] = trace.failure_reason;
  if (!trace.records.empty()) {
    const auto& last = trace.records.back();
    summary["final"] = Json{{"k", last.k}, {"t", last.t}, {"x", to_json(last.x)}, {"psi", number_or_string(last.psi)},
                            {"inner_status", to_string(last.inner_status)}};
  }
  int code = trace.terminal == TerminalReason::failure ? kExitInfeasible : kExitOk;
  if (kind && !trace.records.empty()) {
    const Vector& x = trace.records.back().x;
    const InnerSolveResult at0 = evaluate_psi_t(b.problem, x, 0.0, p.inner);
    if (at0.status == InnerStatus::infeasible) {
      summary["stationarity"] = Json{{"error", "no point of D(x) found at the final x"}};
    } else {
      const TriplePoint pt = TriplePoint::from_follower(x, at0.argmax.points.front(), b.problem.m());
      StationarityOptions so;
      so.inner = p.inner;
      try {
        const auto rec = recover_c_multipliers(b.problem, pt, *kind, so);
        Json s{{"point", Json{{"x", to_json(pt.x)}, {"y", to_json(pt.y)}, {"u", to_json(pt.u)}}},
               {"recovered", rec.feasible}};
        if (rec.feasible) s["report"] = to_json(check_stationarity(b.problem, pt, rec.multipliers, *kind, so));
        summary["stationarity"] = s;
      } catch (const CheckerRefusal& e) {
        summary["stationarity"] = Json{{"refused", e.what()}};
        code = std::max(code, kExitRefusal);
      } catch (const InfeasiblePointError& e) {
        summary["stationarity"] = Json{{"error", e.what()}};
      }
    }
  }
  std::ofstream f(fs::path(o.out) / "summary.json");
  f << report("summary", summary).dump(2) << "\n";
  std::cerr << "terminal=" << to_string(trace.terminal) << " records=" << trace.records.size() << " out=" << o.out
            << "\n";
  return code;
}

// ---------------------------------------------------------------------------

struct EvalOpts {
  CommonOpts common;
  std::string x;
  double t = 0.0;
};

int cmd_eval(const EvalOpts& o) {
  const Benchmark b = make_benchmark(o.common.problem);
  const Vector x = parse_dim(o.x, b.problem.n(), "--x");
  const InnerSolveResult r = evaluate_psi_t(b.problem, x, o.t, o.common.inner());
  Json j = to_json(r);
  j["x"] = to_json(x);
  j["t"] = o.t;
  print(report("eval", j));
  return r.status == InnerStatus::infeasible ? kExitInfeasible : kExitOk;
}

// ---------------------------------------------------------------------------

struct CheckOpts {
  CommonOpts common;
  std::string point;
  std::string kind = "C";
  double tol = 1e-8;
  double t = -1.0;
  bool graph = true;
  std::size_t pattern_cap = kDefaultPatternCap;
};

int cmd_check(const CheckOpts& o) {
  const Benchmark b = make_benchmark(o.common.problem);
  const BilevelProblem& pb = b.problem;
  const Json pj = read_json_file(o.point);
  for (const char* key : {"x", "y", "u"})
    if (!pj.contains(key)) throw UsageError(std::string("point file lacks '") + key + "'");
  TriplePoint pt{vector_from_json(pj["x"], "x"), vector_from_json(pj["y"], "y"), vector_from_json(pj["u"], "u")};
  pb.check_point(pt);
  double t = o.t;
  if (t < 0.0) t = pj.contains("t") ? pj["t"].get<double>() : 0.0;
  StationarityOptions so;
  so.tol = o.tol;
  so.check_graph = o.graph;
  so.pattern_cap = o.pattern_cap;
  so.inner = o.common.inner();

  Json out{{"kind", o.kind}, {"t", t}};
  const Json* mj = pj.contains("multipliers") ? &pj["multipliers"] : nullptr;
  auto field = [&](const char* name, std::size_t size) {
    if (!mj->contains(name)) throw UsageError(std::string("multipliers lack '") + name + "'");
    const Vector v = vector_from_json((*mj)[name], name);
    if (static_cast<std::size_t>(v.size()) != size) throw UsageError(std::string("multiplier '") + name + "' has wrong size");
    return v;
  };

  if (o.kind == "A" || o.kind == "Ac") {
    const auto k = o.kind == "A" ? StationarityKind::M : StationarityKind::C;
    out["qualification"] = to_json(check_qualification_A(pb, pt, k, so));
  } else if (o.kind == "cq1") {
    if (!(t > 0.0)) throw UsageError("cq1 needs t > 0");
    out["cq1"] = to_json(check_cq1(pb, t, pt, so));
  } else if (o.kind == "relaxed") {
    if (!(t > 0.0)) throw UsageError("relaxed stationarity needs t > 0");
    RelaxedMultipliers rm;
    if (mj) {
      rm = RelaxedMultipliers{field("alpha", pb.p()), field("beta", pb.m()), field("gamma", pb.q()),
                              field("mu", pb.q()), field("delta", pb.q())};
      out["recovered"] = false;
    } else {
      const auto rec = recover_relaxed_multipliers(pb, t, pt, so);
      out["recovered"] = rec.feasible;
      if (!rec.feasible) {
        out["pass"] = false;
        print(report("check", out));
        return kExitOk;
      }
      rm = rec.multipliers;
    }
    const auto rep = check_relaxed_stationarity(pb, t, pt, rm, so);
    out["pass"] = rep.pass;
    out["stationarity"] = to_json(rep);
  } else {
    const StationarityKind kind = parse_kind(o.kind);
    Multipliers m;
    if (mj) {
      m = Multipliers{field("alpha", pb.p()), field("beta", pb.m()), field("gamma", pb.q())};
      out["recovered"] = false;
    } else {
      const auto rec = recover_c_multipliers(pb, pt, kind, so);
      out["recovered"] = rec.feasible;
      out["patterns_tried"] = rec.patterns_tried;
      if (!rec.feasible) {
        out["pass"] = false;
        out["index_sets"] = to_json(rec.index_sets);
        print(report("check", out));
        return kExitOk;
      }
      m = rec.multipliers;
    }
    const auto rep = check_stationarity(pb, pt, m, kind, so);
    out["pass"] = rep.pass;
    out["stationarity"] = to_json(rep);
  }
  print(report("check", out));
  return kExitOk;
}

// ---------------------------------------------------------------------------

struct DiagnoseOpts {
  CommonOpts common;
  std::string trace;
  std::string argmax;
  std::string x_bar;
  std::string out;
};

int cmd_diagnose(const DiagnoseOpts& o) {
  const Benchmark b = make_benchmark(o.common.problem);
  std::ifstream tin(o.trace);
  if (!tin) throw UsageError("cannot open '" + o.trace + "'");
  RunTrace trace = read_trace_csv(tin);
  if (trace.records.empty()) throw UsageError("trace '" + o.trace + "' has no rows");
  const std::string apath = o.argmax.empty() ? (fs::path(o.trace).parent_path() / "argmax.csv").string() : o.argmax;
  std::ifstream ain(apath);
  if (!ain) throw UsageError("cannot open '" + apath + "'");
  read_argmax_csv(ain, trace);
  const Vector x_bar = parse_dim(o.x_bar, b.problem.n(), "--x-bar");
  DiagnosticConfig cfg;
  cfg.inner = o.common.inner();
  const ExcessSeries s = convergence_diagnostic(b.problem, trace, x_bar, cfg);
  if (o.out.empty()) {
    write_excess_csv(std::cout, s);
  } else {
    std::ofstream f(o.out);
    write_excess_csv(f, s);
  }
  return kExitOk;
}

// ---------------------------------------------------------------------------

struct GradcheckOpts {
  CommonOpts common;
  std::size_t points = 50;
  double h = 1e-6;
  double tol = 1e-5;
};

int cmd_gradcheck(const GradcheckOpts& o) {
  const Benchmark b = make_benchmark(o.common.problem);
  const BilevelProblem& pb = b.problem;
  const Box xbox = pb.leader_box().empty() ? Box::uniform(pb.n(), -1.0, 1.0) : pb.leader_box();
  const Box& zbox = b.follower_grid_box;
  std::mt19937_64 rng(detail::splitmix64(o.common.seed));
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  auto draw = [&](const Box& bx) {
    Vector v(bx.size());
    for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = bx.lower[i] + unit(rng) * (bx.upper[i] - bx.lower[i]);
    return v;
  };
  double worst = 0.0;
  Json per = Json::array();
  for (std::size_t k = 0; k < o.points; ++k) {
    const Vector x = draw(xbox);
    const Vector z = draw(zbox);
    const auto rep = check_gradients_fd(pb, TriplePoint::from_follower(x, z, pb.m()), o.h);
    worst = std::max(worst, rep.max_error());
    per.push_back(Json{{"x", to_json(x)}, {"z", to_json(z)}, {"max_rel_error", number_or_string(rep.max_error())}});
  }
  print(report("gradcheck", Json{{"problem", o.common.problem},
                                 {"points", o.points},
                                 {"h", o.h},
                                 {"tol", o.tol},
                                 {"max_rel_error", number_or_string(worst)},
                                 {"pass", worst <= o.tol},
                                 {"samples", per}}));
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Pessimistic bilevel solver via the relaxed KKT reformulation"};
  app.require_subcommand(1);
  app.set_config("--config", "", "TOML/INI file with option values; flags override it");
  app.allow_config_extras(CLI::config_extras_mode::error);

  SolveOpts so;
  auto* solve = app.add_subcommand("solve", "Run the relaxation homotopy and write trace.csv, argmax.csv, summary.json");
  add_common(solve, so.common);
  solve->add_option("--t0", so.t0, "Initial relaxation parameter");
  solve->add_option("--rho", so.rho, "Reduction factor in (0, 1)");
  solve->add_option("--tmin", so.t_min, "Smallest relaxation parameter");
  solve->add_option("--max-iters", so.max_iters, "Outer iteration cap");
  solve->add_option("--x-tol", so.x_tol, "Stop after two leader steps below this (0 disables)");
  solve->add_option("--x0", so.x0, "Leader start, comma separated");
  solve->add_option("--out", so.out, "Output directory");
  solve->add_option("--check", so.check, "Stationarity kind to certify at the final point (C, M or S)");
  solve->add_option("--outer-max-evals", so.outer_max_evals, "Pattern search budget per t");
  solve->add_option("--mesh-tol", so.mesh_tol, "Pattern search mesh tolerance");

  EvalOpts eo;
  auto* eval = app.add_subcommand("eval", "Evaluate psi^t(x) and print the argmax sample");
  add_common(eval, eo.common);
  eval->add_option("--x", eo.x, "Leader point, comma separated")->required();
  eval->add_option("--t", eo.t, "Relaxation parameter (0: unrelaxed)")->check(CLI::NonNegativeNumber);

  CheckOpts co;
  auto* check = app.add_subcommand("check", "Check stationarity or a qualification condition at a point");
  add_common(check, co.common);
  check->add_option("--point", co.point, "JSON file with x, y, u and optional t, multipliers")->required();
  check->add_option("--kind", co.kind, "C, M, S, relaxed, A, Ac or cq1")
      ->check(CLI::IsMember({"C", "M", "S", "relaxed", "A", "Ac", "cq1"}));
  check->add_option("--tol", co.tol, "Residual tolerance");
  check->add_option("--t", co.t, "Relaxation parameter (overrides the point file)");
  check->add_flag("!--no-graph", co.graph, "Skip the inner-maximum surrogate row");
  check->add_option("--pattern-cap", co.pattern_cap, "Largest biactive set enumerated before refusing");

  DiagnoseOpts dO;
  auto* diagnose = app.add_subcommand("diagnose", "Excess of a trace's argmax samples over S_p(x_bar)");
  add_common(diagnose, dO.common);
  diagnose->add_option("--trace", dO.trace, "trace.csv written by solve")->required();
  diagnose->add_option("--argmax", dO.argmax, "argmax.csv (default: next to the trace)");
  diagnose->add_option("--x-bar", dO.x_bar, "Limit point, comma separated")->required();
  diagnose->add_option("--out", dO.out, "Output CSV (default: stdout)");

  GradcheckOpts go;
  auto* gradcheck = app.add_subcommand("gradcheck", "Compare derivative providers with central differences");
  add_common(gradcheck, go.common);
  gradcheck->add_option("--points", go.points, "Random points")->check(CLI::PositiveNumber);
  gradcheck->add_option("--step", go.h, "Central difference step")->check(CLI::PositiveNumber);
  gradcheck->add_option("--tol", go.tol, "Pass threshold on the max relative error");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*solve) return cmd_solve(so);
    if (*eval) return cmd_eval(eo);
    if (*check) return cmd_check(co);
    if (*diagnose) return cmd_diagnose(dO);
    if (*gradcheck) return cmd_gradcheck(go);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const InfeasiblePointError& e) {
    std::cerr << "infeasible: " << e.what() << "\n";
    return kExitInfeasible;
  } catch (const CheckerRefusal& e) {
    std::cerr << "refused: " << e.what() << "\n";
    return kExitRefusal;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  }
  return kExitUsage;
}
