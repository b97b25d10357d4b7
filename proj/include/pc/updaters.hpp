#pragma once

// Update rules for product distributions, multiplier ascent, automated
// annealing, and the triple-loop solver.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <numeric>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "pc/aging.hpp"
#include "pc/core.hpp"
#include "pc/error.hpp"
#include "pc/objective.hpp"
#include "pc/trace.hpp"

namespace pc {

enum class UpdateRule { Brouwer, NearestNewton, Gradient };

enum class ScheduleMode { Parallel, Serial, IndependentSubset };

struct UpdateSchedule {
  ScheduleMode mode = ScheduleMode::IndependentSubset;
  double inertia = 0.0;  // decay of exponentially aged conditional expectations

  void validate() const {
    if (!(inertia >= 0.0 && inertia < 1.0)) throw DomainError("UpdateSchedule: inertia must lie in [0,1)");
  }
};

namespace detail {

inline Row newton_row(std::span<const double> cond, std::span<const double> row, double step, double temperature,
                      double floor) {
  double mean = 0.0;
  for (std::size_t k = 0; k < row.size(); ++k) mean += row[k] * cond[k];
  double s = row_entropy(row);
  Row out(row.size());
  bool valid = true;
  for (std::size_t k = 0; k < row.size(); ++k) {
    out[k] = row[k] - step * row[k] * ((cond[k] - mean) / temperature + s + std::log(row[k]));
    valid = valid && out[k] >= 0.0 && out[k] <= 1.0;
  }
  if (!valid) return simplex_repair(out, floor);
  apply_floor(out, floor);
  return out;
}

inline Row gradient_row(std::span<const double> cond, std::span<const double> row, double step, double temperature,
                        double floor) {
  Row g = centered_gradient_row(cond, row, temperature);
  for (std::size_t k = 0; k < row.size(); ++k) g[k] = row[k] - step * g[k];
  return simplex_repair(g, floor);
}

inline Row apply_rule(UpdateRule rule, std::span<const double> cond, std::span<const double> row, double step,
                      double temperature, double floor) {
  switch (rule) {
    case UpdateRule::Brouwer: return boltzmann_row(cond, temperature, floor);
    case UpdateRule::NearestNewton: return newton_row(cond, row, step, temperature, floor);
    case UpdateRule::Gradient: return gradient_row(cond, row, step, temperature, floor);
  }
  return Row(row.begin(), row.end());
}

}  // namespace detail

/// q_i(x_i) ∝ exp(-E_{q_-i}(G|x_i)/T) for every listed agent, all evaluated against the input snapshot.
inline ProductDistribution brouwer_step(const FactoredObjective& obj, const ProductDistribution& q,
                                        std::span<const std::size_t> agents, double temperature,
                                        double floor = kDefaultFloor, unsigned threads = 1) {
  check_distribution(obj, q);
  if (!(temperature > 0.0)) throw DomainError("brouwer_step: temperature must be positive");
  std::vector<Row> rows(agents.size());
  parallel_for(agents.size(), threads, [&](std::size_t k) {
    rows[k] = boltzmann_row(local_conditional_expectation(obj, q, agents[k]), temperature, floor);
  });
  ProductDistribution next = q;
  for (std::size_t k = 0; k < agents.size(); ++k) next.set_row(agents[k], std::move(rows[k]));
  return next;
}

/// Nearest-Newton update of every row; rows leaving [0,1] are projected back onto the simplex.
inline ProductDistribution nearest_newton_step(const FactoredObjective& obj, const ProductDistribution& q,
                                               double step, double temperature, double floor = kDefaultFloor) {
  check_distribution(obj, q);
  if (!(step >= 0.0) || !(temperature > 0.0)) throw DomainError("nearest_newton_step: bad step or temperature");
  ProductDistribution next = q;
  for (std::size_t i = 0; i < q.agents(); ++i)
    next.set_row(i, detail::newton_row(local_conditional_expectation(obj, q, i), q.row(i), step, temperature, floor));
  return next;
}

/// q <- simplex_repair(q - step * centered gradient), row by row.
inline ProductDistribution gradient_step(const FactoredObjective& obj, const ProductDistribution& q, double step,
                                         double temperature, double floor = kDefaultFloor) {
  check_distribution(obj, q);
  if (!(step >= 0.0) || !(temperature > 0.0)) throw DomainError("gradient_step: bad step or temperature");
  ProductDistribution next = q;
  for (std::size_t i = 0; i < q.agents(); ++i)
    next.set_row(i, detail::gradient_row(local_conditional_expectation(obj, q, i), q.row(i), step, temperature, floor));
  return next;
}

/// lambda_a + step * E_q(c_a), starting from the objective's current multipliers.
inline std::vector<double> update_multipliers(const FactoredObjective& obj, const ProductDistribution& q,
                                              double step) {
  auto expected = expected_constraints(obj, q);
  std::vector<double> lambda = obj.multipliers();
  for (std::size_t a = 0; a < lambda.size(); ++a) lambda[a] += step * expected[a];
  return lambda;
}

struct Annealed {
  std::vector<double> multipliers;
  double temperature;
};

/// Divides multipliers and temperature by sum(lambda).
inline Annealed rescale_annealing(std::span<const double> lambda, double temperature) {
  double total = std::accumulate(lambda.begin(), lambda.end(), 0.0);
  if (!(total > 0.0)) throw DomainError("rescale_annealing: multipliers sum to zero");
  Annealed out{std::vector<double>(lambda.begin(), lambda.end()), temperature / total};
  for (double& l : out.multipliers) l /= total;
  return out;
}

/// Greedy maximal set of agents, in random order, no two of which share a factor.
inline std::vector<std::size_t> independent_subset(const FactorGraph& fg, Rng& rng) {
  std::vector<std::size_t> order(fg.agents());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<bool> blocked(fg.agents(), false);
  std::vector<std::size_t> chosen;
  for (auto i : order) {
    if (blocked[i]) continue;
    chosen.push_back(i);
    for (auto j : fg.neighbors(i)) blocked[j] = true;
  }
  std::sort(chosen.begin(), chosen.end());
  return chosen;
}

enum class Termination { Solved, Converged, IterationCap };

inline const char* to_string(Termination t) {
  switch (t) {
    case Termination::Solved: return "solved";
    case Termination::Converged: return "converged";
    case Termination::IterationCap: return "iteration-cap";
  }
  return "?";
}

struct SolveResult {
  ProductDistribution distribution;
  JointConfiguration best;  // lowest (violations, G) mode seen
  double best_objective = std::numeric_limits<double>::infinity();
  std::size_t best_violations = std::numeric_limits<std::size_t>::max();
  std::vector<double> multipliers;  // unnormalized
  double final_temperature = 0.0;   // effective temperature at exit
  std::size_t steps = 0;
  std::vector<TraceRecord> trace;
  Termination reason = Termination::IterationCap;
};

using TraceSink = std::function<void(const TraceRecord&)>;

namespace detail {

/// Shared bookkeeping for the solver loops: multipliers, temperature, trace, caps.
class SolverState {
 public:
  SolverState(FactoredObjective& obj, const SolverConfig& cfg, const TraceSink& sink, bool timing)
      : obj_(obj), cfg_(cfg), sink_(sink), timing_(timing), raw_(obj.multipliers()), temperature_(cfg.temperature),
        start_(std::chrono::steady_clock::now()) {
    rescale_ = cfg.anneal == AnnealMode::LambdaRescale && !obj.constraints().empty();
    refresh();
  }

  double temperature() const { return temperature_; }
  double effective_temperature() const { return effective_; }
  const std::vector<double>& raw_multipliers() const { return raw_; }
  double lambda_l1() const {
    double s = 0.0;
    for (double l : raw_) s += std::abs(l);
    return s;
  }

  void ascend(std::span<const double> expected) {
    for (std::size_t a = 0; a < raw_.size(); ++a) raw_[a] += cfg_.step_lambda * expected[a];
    refresh();
  }

  void cool() {
    temperature_ *= cfg_.cooling;
    refresh();
  }

  bool too_cold() const { return effective_ < cfg_.min_temperature; }

  void emit(TraceRecord rec, std::vector<TraceRecord>& out) {
    rec.sequence = sequence_++;
    rec.temperature = temperature_;
    rec.effective_temperature = effective_;
    rec.lambda_l1 = lambda_l1();
    if (rec.phase != Phase::Inner) rec.multipliers = raw_;
    if (timing_)
      rec.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start_).count();
    if (sink_) sink_(rec);
    out.push_back(std::move(rec));
  }

 private:
  void refresh() {
    if (rescale_) {
      auto a = rescale_annealing(raw_, temperature_);
      obj_.set_multipliers(std::move(a.multipliers));
      effective_ = a.temperature;
    } else {
      obj_.set_multipliers(raw_);
      effective_ = temperature_;
    }
  }

  FactoredObjective& obj_;
  const SolverConfig& cfg_;
  const TraceSink& sink_;
  bool timing_;
  std::vector<double> raw_;
  double temperature_;
  double effective_ = 0.0;
  bool rescale_ = false;
  std::size_t sequence_ = 0;
  std::chrono::steady_clock::time_point start_;
};

inline bool better(std::size_t viol, double g, std::size_t best_viol, double best_g) {
  return viol < best_viol || (viol == best_viol && g < best_g);
}

}  // namespace detail

/// Options of the single-product solver beyond SolverConfig.
struct SolveOptions {
  UpdateRule rule = UpdateRule::Brouwer;
  UpdateSchedule schedule{};
  std::optional<ProductDistribution> initial;  // uniform when absent
  bool timing = false;                         // record wall-clock ms in the trace
};

/// Inner loop: update until the centered gradient norm drops below tolerance.
/// Middle loop: multiplier ascent until expected violation is below tolerance.
/// Outer loop: cooling (rescaled multipliers when constrained, geometric otherwise).
inline SolveResult solve(FactoredObjective obj, const SolverConfig& cfg, const SolveOptions& opts = {},
                         const TraceSink& sink = {}) {
  cfg.validate();
  opts.schedule.validate();
  const std::size_t n = obj.agents();
  const bool constrained = !obj.constraints().empty();
  Rng rng(cfg.seed);
  FactorGraph graph(obj);
  detail::SolverState state(obj, cfg, sink, opts.timing);

  SolveResult res;
  res.distribution = opts.initial ? *opts.initial : ProductDistribution::uniform(obj.arities());
  check_distribution(obj, res.distribution);
  ProductDistribution& q = res.distribution;

  std::vector<AgedAverage> aged;
  if (opts.schedule.inertia > 0.0) aged.assign(n, AgedAverage(opts.schedule.inertia));

  std::vector<std::size_t> all(n);
  std::iota(all.begin(), all.end(), std::size_t{0});

  auto conditional = [&](std::size_t i) {
    Row c = local_conditional_expectation(obj, q, i);
    if (aged.empty()) return c;
    aged[i].push(c);
    return aged[i].value();
  };

  auto update_parallel = [&](std::span<const std::size_t> agents) {
    std::vector<Row> rows(agents.size());
    std::vector<Row> conds(agents.size());
    parallel_for(agents.size(), cfg.threads,
                 [&](std::size_t k) { conds[k] = local_conditional_expectation(obj, q, agents[k]); });
    for (std::size_t k = 0; k < agents.size(); ++k) {
      std::size_t i = agents[k];
      if (!aged.empty()) {
        aged[i].push(conds[k]);
        conds[k] = aged[i].value();
      }
      rows[k] = detail::apply_rule(opts.rule, conds[k], q.row(i), cfg.step_q, state.effective_temperature(), cfg.floor);
    }
    for (std::size_t k = 0; k < agents.size(); ++k) q.set_row(agents[k], std::move(rows[k]));
  };

  auto step = [&] {
    switch (opts.schedule.mode) {
      case ScheduleMode::Parallel: update_parallel(all); break;
      case ScheduleMode::Serial:
        for (auto i : all)
          q.set_row(i, detail::apply_rule(opts.rule, conditional(i), q.row(i), cfg.step_q,
                                          state.effective_temperature(), cfg.floor));
        break;
      case ScheduleMode::IndependentSubset: {
        auto subset = independent_subset(graph, rng);
        update_parallel(subset);
        break;
      }
    }
  };

  auto observe = [&](Phase phase) {
    JointConfiguration m = mode(q);
    std::size_t viol = violated_constraints(obj, m);
    double g = evaluate(obj, m, false);
    if (detail::better(viol, g, res.best_violations, res.best_objective)) {
      res.best = m;
      res.best_violations = viol;
      res.best_objective = g;
    }
    TraceRecord rec;
    rec.step = res.steps;
    rec.phase = phase;
    rec.lagrangian = lagrangian(obj, q, state.effective_temperature());
    rec.expected_objective = expected_value(obj, q, false);
    auto ec = expected_constraints(obj, q);
    rec.expected_violation = std::accumulate(ec.begin(), ec.end(), 0.0);
    rec.mode_violations = viol;
    state.emit(std::move(rec), res.trace);
    return viol;
  };

  auto finish = [&](Termination why) {
    res.reason = why;
    res.multipliers = state.raw_multipliers();
    res.final_temperature = state.effective_temperature();
    return res;
  };

  for (std::size_t outer = 0; outer < cfg.max_outer; ++outer) {
    for (;;) {
      for (std::size_t k = 0; k < cfg.max_inner; ++k) {
        if (res.steps >= cfg.max_iterations) return finish(Termination::IterationCap);
        step();
        ++res.steps;
        std::size_t mode_viol = observe(Phase::Inner);
        if (constrained && mode_viol == 0) return finish(Termination::Solved);
        if (norm2(projected_gradient(obj, q, state.effective_temperature(), cfg.floor, cfg.threads)) < cfg.grad_tol)
          break;
      }
      auto ec = expected_constraints(obj, q);
      if (std::accumulate(ec.begin(), ec.end(), 0.0) < cfg.violation_tol) break;
      state.ascend(ec);
      observe(Phase::Multiplier);
      if (state.too_cold()) return finish(Termination::Converged);
    }
    state.cool();
    observe(Phase::Anneal);
    if (state.too_cold()) return finish(Termination::Converged);
  }
  return finish(Termination::IterationCap);
}

}  // namespace pc
