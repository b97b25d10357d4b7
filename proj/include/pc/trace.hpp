#pragma once

// Line-oriented trace records: one self-describing key=value record per line.

#include <cstddef>
#include <cstdio>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace pc {

inline constexpr int kTraceSchemaVersion = 1;

enum class Phase { Inner, Multiplier, Anneal };

inline const char* to_string(Phase p) {
  switch (p) {
    case Phase::Inner: return "inner";
    case Phase::Multiplier: return "multiplier";
    case Phase::Anneal: return "anneal";
  }
  return "?";
}

struct TraceRecord {
  std::size_t sequence = 0;  // strictly increasing within a run
  std::size_t step = 0;      // update steps taken so far
  Phase phase = Phase::Inner;
  double lagrangian = 0.0;
  double expected_objective = 0.0;  // E_q(G) without constraint terms
  double expected_violation = 0.0;  // sum_a E_q(c_a)
  std::size_t mode_violations = 0;
  double temperature = 0.0;
  double effective_temperature = 0.0;
  double lambda_l1 = 0.0;
  std::vector<double> multipliers;  // raw multipliers on multiplier and anneal records; kept in memory only
  std::optional<double> js;
  std::vector<std::size_t> component_violations;
  std::vector<std::string> component_modes;
  std::optional<double> wall_ms;
};

inline std::string format_number(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

inline std::string trace_header() { return "# pc-trace schema=" + std::to_string(kTraceSchemaVersion); }

inline std::string format_trace(const TraceRecord& r) {
  std::string s = "seq=" + std::to_string(r.sequence) + " step=" + std::to_string(r.step) +
                  " phase=" + to_string(r.phase) + " L=" + format_number(r.lagrangian) +
                  " EG=" + format_number(r.expected_objective) + " viol=" + format_number(r.expected_violation) +
                  " mode_viol=" + std::to_string(r.mode_violations) + " T=" + format_number(r.temperature) +
                  " That=" + format_number(r.effective_temperature) + " lambda1=" + format_number(r.lambda_l1);
  if (r.js) s += " js=" + format_number(*r.js);
  if (!r.component_violations.empty()) {
    s += " comp_viol=";
    for (std::size_t m = 0; m < r.component_violations.size(); ++m)
      s += (m ? "," : "") + std::to_string(r.component_violations[m]);
  }
  if (!r.component_modes.empty()) {
    s += " comp_modes=";
    for (std::size_t m = 0; m < r.component_modes.size(); ++m) s += (m ? "|" : "") + r.component_modes[m];
  }
  if (r.wall_ms) s += " ms=" + format_number(*r.wall_ms);
  return s;
}

inline void write_trace(std::ostream& os, const std::vector<TraceRecord>& records) {
  os << trace_header() << '\n';
  for (const auto& r : records) os << format_trace(r) << '\n';
}

}  // namespace pc
