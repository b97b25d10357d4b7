#pragma once

// Subcommand bodies of the pc tool, kept free of argument parsing so tests can drive them.

#include <cmath>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <memory>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "pc/core.hpp"
#include "pc/error.hpp"
#include "pc/mixture.hpp"
#include "pc/objective.hpp"
#include "pc/problems.hpp"
#include "pc/trace.hpp"
#include "pc/updaters.hpp"

namespace pc::cli {

inline constexpr int kExitSolved = 0;
inline constexpr int kExitUnsolved = 1;
inline constexpr int kExitUsage = 2;

inline constexpr double kKsatProductTemperature = 1.5e-3;
inline constexpr double kMixtureTemperature = 1e-1;
inline constexpr double kNkMinTemperature = 1e-3;
inline constexpr std::size_t kNkMixtures = 5;

/// Thrown for bad flag values; maps to the usage exit code.
class UsageError : public Error {
 public:
  using Error::Error;
};

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UsageError("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw UsageError("cannot write " + path);
  out << text;
}

inline UpdateRule parse_rule(const std::string& name) {
  if (name == "brouwer") return UpdateRule::Brouwer;
  if (name == "newton") return UpdateRule::NearestNewton;
  if (name == "gradient") return UpdateRule::Gradient;
  throw UsageError("unknown update rule: " + name);
}

/// Streams trace records to a file, to `out` for "-", or nowhere.
class TraceWriter {
 public:
  TraceWriter(const std::string& path, std::ostream& out) {
    if (path.empty()) return;
    if (path == "-") {
      os_ = &out;
    } else {
      file_ = std::make_unique<std::ofstream>(path);
      if (!*file_) throw UsageError("cannot write trace " + path);
      os_ = file_.get();
    }
    *os_ << trace_header() << '\n';
  }

  TraceSink sink() {
    if (!os_) return {};
    return [this](const TraceRecord& r) { *os_ << format_trace(r) << '\n'; };
  }

 private:
  std::unique_ptr<std::ofstream> file_;
  std::ostream* os_ = nullptr;
};

inline std::string dimacs_assignment(const JointConfiguration& z) {
  std::string s = "v";
  for (std::size_t v = 0; v < z.size(); ++v) s += " " + std::string(z[v] ? "" : "-") + std::to_string(v + 1);
  return s + " 0";
}

struct PlantedSpec {
  std::size_t variables = 0, clauses = 0, k = 3;
  std::uint64_t seed = 0;
};

struct KsatOptions {
  std::string path;
  std::optional<PlantedSpec> planted;
  std::size_t mixtures = 1;
  std::string update = "brouwer";
  std::optional<double> temperature;
  double alpha_lambda = 0.5;
  std::uint64_t seed = 0;
  std::string trace;
  std::size_t max_iters = 100000;
  unsigned threads = 1;
  bool timing = false;
};

inline SolverConfig ksat_config(const KsatOptions& o) {
  SolverConfig cfg;
  cfg.temperature = o.temperature.value_or(o.mixtures > 1 ? kMixtureTemperature : kKsatProductTemperature);
  cfg.step_lambda = o.alpha_lambda;
  cfg.seed = o.seed;
  cfg.max_iterations = o.max_iters;
  cfg.threads = o.threads;
  cfg.anneal = AnnealMode::LambdaRescale;
  return cfg;
}

inline int run_solve_ksat(const KsatOptions& o, std::ostream& out, std::ostream& err) {
  if (o.path.empty() == !o.planted) throw UsageError("give exactly one of an instance file or --planted");
  if (o.mixtures == 0) throw UsageError("--mixtures must be at least 1");
  CnfInstance inst = o.planted ? generate_planted_ksat(o.planted->variables, o.planted->clauses, o.planted->k,
                                                       o.planted->seed)
                               : parse_dimacs(read_file(o.path));
  if (inst.variables == 0) throw UsageError("instance has no variables");
  FactoredObjective obj = ksat_objective(inst);
  SolverConfig cfg = ksat_config(o);
  cfg.validate();
  TraceWriter trace(o.trace, out);

  std::vector<JointConfiguration> reported;
  std::size_t steps = 0;
  double expected = 0.0;
  Termination reason;
  if (o.mixtures == 1) {
    SolveOptions so;
    so.rule = parse_rule(o.update);
    so.timing = o.timing;
    SolveResult r = solve(obj, cfg, so, trace.sink());
    reported.push_back(r.best);
    steps = r.steps;
    reason = r.reason;
    auto ec = expected_constraints(obj, r.distribution);
    expected = std::accumulate(ec.begin(), ec.end(), 0.0);
  } else {
    if (o.update != "brouwer") throw UsageError("mixture runs use their own coordinate updates; drop --update");
    MixtureOptions mo;
    mo.components = o.mixtures;
    mo.timing = o.timing;
    MixtureSolveResult r = solve_mixture(obj, cfg, mo, trace.sink());
    reported = r.best;
    steps = r.steps;
    reason = r.reason;
    for (std::size_t m = 0; m < r.state.size(); ++m) {
      auto ec = expected_constraints(obj, r.state.components[m]);
      expected += r.state.q0[m] * std::accumulate(ec.begin(), ec.end(), 0.0);
    }
  }

  bool solved = false;
  out << "variables " << inst.variables << " clauses " << inst.clauses.size() << '\n';
  for (std::size_t m = 0; m < reported.size(); ++m) {
    std::size_t viol = count_violations(inst, reported[m]);
    solved = solved || viol == 0;
    if (reported.size() > 1) out << "component " << m << ' ';
    out << "violations " << viol << '\n' << dimacs_assignment(reported[m]) << '\n';
  }
  out << "steps " << steps << '\n';
  out << "expected_violation " << format_number(expected) << '\n';
  out << "termination " << to_string(reason) << '\n';
  out << "status " << (solved ? "SATISFIED" : "UNSATISFIED") << '\n';
  if (!solved) err << "no satisfying assignment found (" << to_string(reason) << ")\n";
  return solved ? kExitSolved : kExitUnsolved;
}

struct NkOptions {
  std::size_t sites = 0, k = 0;
  std::uint64_t instance_seed = 0;
  std::string path;
  std::size_t mixtures = kNkMixtures;
  std::optional<double> temperature;
  double min_temperature = kNkMinTemperature;
  double cooling = 0.9;
  std::uint64_t seed = 0;
  std::string trace;
  std::size_t max_iters = 100000;
  unsigned threads = 1;
  bool timing = false;
};

inline SolverConfig nk_config(const NkOptions& o) {
  SolverConfig cfg;
  cfg.temperature = o.temperature.value_or(kMixtureTemperature);
  cfg.anneal = AnnealMode::Geometric;
  cfg.min_temperature = o.min_temperature;
  cfg.cooling = o.cooling;
  cfg.seed = o.seed;
  cfg.max_iterations = o.max_iters;
  cfg.threads = o.threads;
  return cfg;
}

inline int run_solve_nk(const NkOptions& o, std::ostream& out, std::ostream&) {
  if (o.mixtures == 0) throw UsageError("--mixtures must be at least 1");
  NkInstance inst = o.path.empty() ? generate_nk(o.sites, o.k, o.instance_seed) : parse_nk(read_file(o.path));
  FactoredObjective obj = nk_objective(inst);
  SolverConfig cfg = nk_config(o);
  cfg.validate();
  TraceWriter trace(o.trace, out);
  MixtureOptions mo;
  mo.components = o.mixtures;
  mo.timing = o.timing;
  MixtureSolveResult r = solve_mixture(obj, cfg, mo, trace.sink());

  out << "nk N=" << inst.sites << " K=" << inst.neighbors_per_site << " seed=" << inst.seed << '\n';
  for (std::size_t m = 0; m < r.best.size(); ++m) {
    double g = nk_value(inst, r.best[m]);
    out << "component " << m << " G=" << format_number(g) << " z=" << to_string(r.best[m]) << '\n';
  }
  std::size_t b = r.best_component();
  out << "best component " << b << " G=" << format_number(nk_value(inst, r.best[b])) << '\n';
  for (std::size_t a = 0; a < r.best.size(); ++a)
    for (std::size_t c = a + 1; c < r.best.size(); ++c)
      out << "hamming " << a << ' ' << c << ' ' << hamming_distance(r.best[a], r.best[c]) << '\n';
  out << "js " << format_number(r.js) << '\n';
  out << "steps " << r.steps << '\n';
  out << "termination " << to_string(r.reason) << '\n';
  return kExitSolved;
}

struct GenerateOptions {
  std::string kind;  // "ksat" or "nk"
  std::size_t n = 0, c = 0, k = 3;
  std::uint64_t seed = 0;
  std::string path;
};

inline int run_generate(const GenerateOptions& o, std::ostream& out, std::ostream&) {
  std::string text;
  if (o.kind == "ksat") {
    if (o.n == 0) throw UsageError("ksat generation needs --n >= 1");
    text = write_dimacs(generate_planted_ksat(o.n, o.c, o.k, o.seed));
  } else if (o.kind == "nk") {
    text = write_nk(generate_nk(o.n, o.k, o.seed));
  } else {
    throw UsageError("unknown instance kind: " + o.kind);
  }
  if (o.path.empty()) out << text;
  else write_file(o.path, text);
  return kExitSolved;
}

/// The two-agent, two-move coordination game used by the landscape demo.
inline FactoredObjective two_by_two_demo() {
  FactoredObjective obj({2, 2});
  obj.add_factor(Factor({0, 1}, {2, 2}, {0.0, 18.0, 25.0, 2.0}));
  return obj;
}

inline constexpr double kDemoTemperature = 7.0;

struct LandscapePoint {
  double p1, p2, value;  // probabilities of move 0 for each agent, and L
};

struct Landscape {
  std::size_t grid = 0;
  std::vector<double> values;          // row-major over (p1 index, p2 index)
  std::vector<LandscapePoint> minima;  // strict local minima over the 8-neighborhood, lowest first
};

inline Landscape landscape(const FactoredObjective& obj, double temperature, std::size_t grid) {
  if (grid < 3) throw UsageError("--grid must be at least 3");
  if (obj.agents() != 2 || obj.arities()[0] != 2 || obj.arities()[1] != 2)
    throw UsageError("landscape needs two binary agents");
  Landscape ls{grid, std::vector<double>(grid * grid), {}};
  auto at = [&](std::size_t k) { return static_cast<double>(k) / static_cast<double>(grid - 1); };
  for (std::size_t a = 0; a < grid; ++a)
    for (std::size_t b = 0; b < grid; ++b) {
      auto q = ProductDistribution::from_rows({{at(a), 1.0 - at(a)}, {at(b), 1.0 - at(b)}});
      ls.values[a * grid + b] = lagrangian(obj, q, temperature);
    }
  for (std::size_t a = 0; a < grid; ++a)
    for (std::size_t b = 0; b < grid; ++b) {
      double v = ls.values[a * grid + b];
      bool lowest = true;
      for (int da = -1; da <= 1 && lowest; ++da)
        for (int db = -1; db <= 1 && lowest; ++db) {
          if (!da && !db) continue;
          long na = static_cast<long>(a) + da, nb = static_cast<long>(b) + db;
          if (na < 0 || nb < 0 || na >= static_cast<long>(grid) || nb >= static_cast<long>(grid)) continue;
          lowest = v < ls.values[static_cast<std::size_t>(na) * grid + static_cast<std::size_t>(nb)];
        }
      if (lowest) ls.minima.push_back({at(a), at(b), v});
    }
  std::sort(ls.minima.begin(), ls.minima.end(),
            [](const LandscapePoint& x, const LandscapePoint& y) { return x.value < y.value; });
  return ls;
}

struct LandscapeOptions {
  std::string demo = "paper2x2";
  std::size_t grid = 201;
  std::string path;
};

inline int run_landscape(const LandscapeOptions& o, std::ostream& out, std::ostream&) {
  if (o.demo != "paper2x2") throw UsageError("unknown demo: " + o.demo);
  Landscape ls = landscape(two_by_two_demo(), kDemoTemperature, o.grid);
  std::ostringstream grid;
  grid << "# q1(0) q2(0) L  T=" << format_number(kDemoTemperature) << '\n';
  for (std::size_t a = 0; a < ls.grid; ++a)
    for (std::size_t b = 0; b < ls.grid; ++b) {
      double step = 1.0 / static_cast<double>(ls.grid - 1);
      grid << format_number(static_cast<double>(a) * step) << ' ' << format_number(static_cast<double>(b) * step)
           << ' ' << format_number(ls.values[a * ls.grid + b]) << '\n';
    }
  if (o.path.empty()) out << grid.str();
  else write_file(o.path, grid.str());
  for (const auto& m : ls.minima)
    out << "# minimum q1(0)=" << format_number(m.p1) << " q2(0)=" << format_number(m.p2)
        << " L=" << format_number(m.value) << '\n';
  return kExitSolved;
}

}  // namespace pc::cli
