#pragma once

// Mixtures of product distributions q(z) = sum_m q0(m) q^m(z), the variational
// lower bound on their Jensen-Shannon term, and the coordinate updates that
// minimize the resulting Lagrangian.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "pc/core.hpp"
#include "pc/error.hpp"
#include "pc/joint_space.hpp"
#include "pc/objective.hpp"
#include "pc/trace.hpp"
#include "pc/updaters.hpp"

namespace pc {

inline constexpr double kNuFloor = 1e-12;

/// Supervisor weights, component products, and the variational parameters w and nu.
struct MixtureState {
  Row q0;
  std::vector<ProductDistribution> components;
  std::vector<std::vector<Row>> w;  // w[m][i] is a distribution over Z_i
  std::vector<double> nu;

  std::size_t size() const { return q0.size(); }
  std::size_t agents() const { return components.front().agents(); }
  const std::vector<std::size_t>& arities() const { return components.front().arities(); }

  void validate() const {
    const std::size_t M = q0.size();
    if (M == 0) throw DimensionError("MixtureState: no components");
    if (components.size() != M || w.size() != M || nu.size() != M)
      throw DimensionError("MixtureState: inconsistent component counts");
    ProductDistribution::from_rows({q0});
    for (std::size_t m = 0; m < M; ++m) {
      if (components[m].arities() != arities()) throw DimensionError("MixtureState: components disagree on arities");
      if (w[m].size() != agents()) throw DimensionError("MixtureState: w needs one row per agent");
      for (std::size_t i = 0; i < agents(); ++i)
        if (w[m][i].size() != arities()[i]) throw DimensionError("MixtureState: w row arity mismatch");
      ProductDistribution::from_rows(w[m]);
      if (!(nu[m] > 0.0) || !std::isfinite(nu[m])) throw DomainError("MixtureState: nu must be positive");
    }
  }
};

/// Overlaps A and log-weight terms B of a mixture state, kept in the log domain.
struct MixtureTerms {
  // local_overlap[i][a][b] = sum_z q^a_i(z) w_i(z|b)
  std::vector<std::vector<std::vector<double>>> local_overlap;
  // log_overlap[a][b] = sum_i ln local_overlap[i][a][b]
  std::vector<std::vector<double>> log_overlap;
  // local_log_weight[i][m] = sum_z q^m_i(z) ln w_i(z|m)
  std::vector<std::vector<double>> local_log_weight;
  std::vector<double> log_weight;

  double overlap(std::size_t a, std::size_t b) const { return std::exp(log_overlap[a][b]); }

  /// Product of the overlaps of every agent except i.
  double overlap_without(std::size_t i, std::size_t a, std::size_t b) const {
    return std::exp(log_overlap[a][b] - std::log(local_overlap[i][a][b]));
  }
};

inline MixtureTerms mixture_terms(const MixtureState& s) {
  const std::size_t M = s.size(), n = s.agents();
  MixtureTerms t;
  t.local_overlap.assign(n, std::vector<std::vector<double>>(M, std::vector<double>(M, 0.0)));
  t.log_overlap.assign(M, std::vector<double>(M, 0.0));
  t.local_log_weight.assign(n, std::vector<double>(M, 0.0));
  t.log_weight.assign(M, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t a = 0; a < M; ++a) {
      auto qa = s.components[a].row(i);
      for (std::size_t b = 0; b < M; ++b) {
        double v = 0.0;
        for (std::size_t z = 0; z < qa.size(); ++z) v += qa[z] * s.w[b][i][z];
        t.local_overlap[i][a][b] = v;
        t.log_overlap[a][b] += std::log(v);
      }
      double lw = 0.0;
      for (std::size_t z = 0; z < qa.size(); ++z)
        if (qa[z] > 0.0) lw += qa[z] * std::log(s.w[a][i][z]);
      t.local_log_weight[i][a] = lw;
      t.log_weight[a] += lw;
    }
  }
  return t;
}

/// nu_m = q0(m) / sum_a q0(a) A^{a,m}, floored.
inline std::vector<double> optimal_nu(const MixtureState& s, const MixtureTerms& t) {
  std::vector<double> nu(s.size());
  for (std::size_t m = 0; m < s.size(); ++m) {
    double d = 0.0;
    for (std::size_t a = 0; a < s.size(); ++a) d += s.q0[a] * t.overlap(a, m);
    nu[m] = std::max(s.q0[m] / d, kNuFloor);
  }
  return nu;
}

/// M copies of the uniform product, uniform w, and nu at its optimum.
inline MixtureState uniform_mixture(std::size_t components, const std::vector<std::size_t>& arities) {
  if (components == 0) throw DomainError("uniform_mixture: need at least one component");
  MixtureState s;
  s.q0.assign(components, 1.0 / static_cast<double>(components));
  s.components.assign(components, ProductDistribution::uniform(arities));
  std::vector<Row> uw;
  for (auto a : arities) uw.emplace_back(a, 1.0 / static_cast<double>(a));
  s.w.assign(components, uw);
  s.nu.assign(components, 1.0);
  s.nu = optimal_nu(s, mixture_terms(s));
  return s;
}

/// Uniform mixture whose component rows get independent multiplicative noise of the given magnitude.
inline MixtureState jittered_mixture(std::size_t components, const std::vector<std::size_t>& arities, Rng& rng,
                                     double jitter = 1e-2, double floor = kDefaultFloor) {
  MixtureState s = uniform_mixture(components, arities);
  std::uniform_real_distribution<double> noise(-jitter, jitter);
  for (auto& q : s.components)
    for (std::size_t i = 0; i < q.agents(); ++i) {
      Row r(q.row(i).begin(), q.row(i).end());
      double total = 0.0;
      for (double& v : r) total += (v *= 1.0 + noise(rng));
      for (double& v : r) v /= total;
      apply_floor(r, floor);
      q.set_row(i, std::move(r));
    }
  s.nu = optimal_nu(s, mixture_terms(s));
  return s;
}

/// sum_m q0(m) prod_i q^m_i(z_i).
inline double mixture_density(const MixtureState& s, const JointConfiguration& z) {
  double p = 0.0;
  for (std::size_t m = 0; m < s.size(); ++m) p += s.q0[m] * s.components[m].prob(z);
  return p;
}

inline DenseDistribution mixture_table(const MixtureState& s) {
  DenseDistribution out{s.arities(), {}};
  out.probs.reserve(joint_size(s.arities()));
  for_each_configuration(s.arities(), [&](const JointConfiguration& z) { out.probs.push_back(mixture_density(s, z)); });
  return out;
}

/// S(mixture) - sum_m q0(m) S(q^m), by enumerating Z.
inline double js_exact(const MixtureState& s) {
  double mix = 0.0;
  for (double p : mixture_table(s).probs)
    if (p > 0.0) mix -= p * std::log(p);
  double parts = 0.0;
  for (std::size_t m = 0; m < s.size(); ++m) parts += s.q0[m] * entropy(s.components[m]);
  return mix - parts;
}

inline double js_variational(const MixtureState& s, const MixtureTerms& t) {
  double j = 0.0;
  for (std::size_t m = 0; m < s.size(); ++m) {
    double cross = 0.0;
    for (std::size_t b = 0; b < s.size(); ++b) cross += t.overlap(m, b) * s.nu[b];
    j += s.q0[m] * (t.log_weight[m] - cross + std::log(s.nu[m]));
  }
  return j + row_entropy(s.q0) + 1.0;
}

/// Lower bound on js_exact, tight when w and nu are optimal.
inline double js_variational(const MixtureState& s) { return js_variational(s, mixture_terms(s)); }

/// Sets nu to its maximizer of the bound.
inline void update_nu(MixtureState& s) { s.nu = optimal_nu(s, mixture_terms(s)); }

/// Maximizes the bound over each w_i(.|m) in turn, then renormalizes it and rescales nu_m so the bound is unchanged.
inline void update_w(MixtureState& s) {
  const std::size_t M = s.size(), n = s.agents();
  MixtureTerms t = mixture_terms(s);
  for (std::size_t m = 0; m < M; ++m) {
    for (std::size_t i = 0; i < n; ++i) {
      Row& w = s.w[m][i];
      Row raw(w.size());
      for (std::size_t z = 0; z < w.size(); ++z) {
        double denom = 0.0;
        for (std::size_t a = 0; a < M; ++a) denom += s.q0[a] * s.components[a](i, z) * t.overlap_without(i, a, m);
        raw[z] = s.q0[m] * s.components[m](i, z) / (s.nu[m] * denom);
      }
      double total = std::accumulate(raw.begin(), raw.end(), 0.0);
      for (std::size_t z = 0; z < w.size(); ++z) w[z] = std::max(raw[z] / total, std::numeric_limits<double>::min());
      s.nu[m] = std::max(s.nu[m] * total, kNuFloor);
      for (std::size_t a = 0; a < M; ++a) {
        double v = 0.0;
        for (std::size_t z = 0; z < w.size(); ++z) v += s.components[a](i, z) * w[z];
        t.log_overlap[a][m] += std::log(v) - std::log(t.local_overlap[i][a][m]);
        t.local_overlap[i][a][m] = v;
      }
    }
  }
}

/// Per-component energy whose Boltzmann distribution is the optimal q0.
inline std::vector<double> component_energies(const MixtureState& s, const MixtureTerms& t,
                                              const FactoredObjective& obj, double temperature) {
  std::vector<double> e(s.size());
  for (std::size_t m = 0; m < s.size(); ++m) {
    double cross = 0.0;
    for (std::size_t b = 0; b < s.size(); ++b) cross += t.overlap(m, b) * s.nu[b];
    e[m] = expected_value(obj, s.components[m]) -
           temperature * (entropy(s.components[m]) + t.log_weight[m] - cross + std::log(s.nu[m]));
  }
  return e;
}

inline void update_q0(MixtureState& s, const FactoredObjective& obj, double temperature,
                      double floor = kDefaultFloor) {
  s.q0 = boltzmann_row(component_energies(s, mixture_terms(s), obj, temperature), temperature, floor);
}

/// Energy of each move of agent i in component m; its Boltzmann distribution is the optimal row.
inline Row component_row_energy(const MixtureState& s, const MixtureTerms& t, const FactoredObjective& obj,
                                std::size_t i, std::size_t m, double temperature) {
  Row e = local_conditional_expectation(obj, s.components[m], i);
  for (std::size_t z = 0; z < e.size(); ++z) {
    double pull = 0.0;
    for (std::size_t b = 0; b < s.size(); ++b) pull += t.overlap_without(i, m, b) * s.nu[b] * s.w[b][i][z];
    e[z] -= temperature * (std::log(s.w[m][i][z]) - pull);
  }
  return e;
}

inline void update_qm(MixtureState& s, const FactoredObjective& obj, std::size_t i, std::size_t m,
                      double temperature, double floor = kDefaultFloor) {
  check_distribution(obj, s.components.at(m));
  if (i >= s.agents()) throw DimensionError("update_qm: agent out of range");
  s.components[m].set_row(i, boltzmann_row(component_row_energy(s, mixture_terms(s), obj, i, m, temperature),
                                           temperature, floor));
}

inline double component_average(const MixtureState& s, const auto& per_component) {
  double v = 0.0;
  for (std::size_t m = 0; m < s.size(); ++m) v += s.q0[m] * per_component(s.components[m]);
  return v;
}

/// sum_m q0(m) L(q^m) - T * bound.
inline double mixture_lagrangian(const MixtureState& s, const FactoredObjective& obj, double temperature) {
  return component_average(s, [&](const ProductDistribution& q) { return lagrangian(obj, q, temperature); }) -
         temperature * js_variational(s);
}

/// sum_m q0(m) L(q^m) - T * exact JS term; equals E(G) - T S over the mixture.
inline double mixture_lagrangian_exact(const MixtureState& s, const FactoredObjective& obj, double temperature) {
  return component_average(s, [&](const ProductDistribution& q) { return lagrangian(obj, q, temperature); }) -
         temperature * js_exact(s);
}

/// Floor-aware centered gradient of the variational Lagrangian over q0 and every component row,
/// with row blocks scaled by their component weight.
inline double mixture_gradient_norm(const MixtureState& s, const FactoredObjective& obj, double temperature,
                                    double floor = kDefaultFloor) {
  MixtureTerms t = mixture_terms(s);
  double sq = 0.0;
  auto add_block = [&](const Row& energy, std::span<const double> row, double scale) {
    for (double v : projected_gradient_row(energy, row, temperature, floor)) sq += scale * scale * v * v;
  };
  add_block(component_energies(s, t, obj, temperature), s.q0, 1.0);
  for (std::size_t m = 0; m < s.size(); ++m)
    for (std::size_t i = 0; i < s.agents(); ++i)
      add_block(component_row_energy(s, t, obj, i, m, temperature), s.components[m].row(i), s.q0[m]);
  return std::sqrt(sq);
}

struct MixtureOptions {
  std::size_t components = 4;
  double jitter = 1e-2;
  bool timing = false;
};

struct MixtureSolveResult {
  MixtureState state;
  std::vector<JointConfiguration> modes;  // final mode of each component
  std::vector<JointConfiguration> best;   // lowest (violations, G) mode seen per component
  std::vector<double> best_objective;
  std::vector<std::size_t> best_violations;
  std::vector<double> multipliers;
  double final_temperature = 0.0;
  double js = 0.0;
  std::size_t steps = 0;
  std::vector<TraceRecord> trace;
  Termination reason = Termination::IterationCap;

  /// Component whose best-seen mode ranks lowest.
  std::size_t best_component() const {
    std::size_t b = 0;
    for (std::size_t m = 1; m < best.size(); ++m)
      if (detail::better(best_violations[m], best_objective[m], best_violations[b], best_objective[b])) b = m;
    return b;
  }
};

/// The single-product loop with mixture sweeps: nu, w, q0, then the rows of a random independent agent set.
inline MixtureSolveResult solve_mixture(FactoredObjective obj, const SolverConfig& cfg,
                                        const MixtureOptions& opts = {}, const TraceSink& sink = {}) {
  cfg.validate();
  if (opts.components == 0) throw DomainError("solve_mixture: need at least one component");
  const std::size_t M = opts.components;
  const bool constrained = !obj.constraints().empty();
  Rng rng(cfg.seed);
  FactorGraph graph(obj);
  detail::SolverState state(obj, cfg, sink, opts.timing);

  MixtureSolveResult res;
  res.state = jittered_mixture(M, obj.arities(), rng, opts.jitter, cfg.floor);
  MixtureState& s = res.state;
  res.best.assign(M, JointConfiguration{});
  res.best_objective.assign(M, std::numeric_limits<double>::infinity());
  res.best_violations.assign(M, std::numeric_limits<std::size_t>::max());
  res.modes.assign(M, JointConfiguration{});

  auto step = [&] {
    double temp = state.effective_temperature();
    update_nu(s);
    update_w(s);
    update_q0(s, obj, temp, cfg.floor);
    auto subset = independent_subset(graph, rng);
    MixtureTerms t = mixture_terms(s);
    for (auto i : subset) {
      for (std::size_t m = 0; m < M; ++m) {
        Row row = boltzmann_row(component_row_energy(s, t, obj, i, m, temp), temp, cfg.floor);
        s.components[m].set_row(i, std::move(row));
        for (std::size_t b = 0; b < M; ++b) {
          double v = 0.0, lw = 0.0;
          for (std::size_t z = 0; z < s.arities()[i]; ++z) {
            v += s.components[m](i, z) * s.w[b][i][z];
            if (b == m) lw += s.components[m](i, z) * std::log(s.w[m][i][z]);
          }
          t.log_overlap[m][b] += std::log(v) - std::log(t.local_overlap[i][m][b]);
          t.local_overlap[i][m][b] = v;
          if (b == m) {
            t.log_weight[m] += lw - t.local_log_weight[i][m];
            t.local_log_weight[i][m] = lw;
          }
        }
      }
    }
  };

  auto expected_mix_constraints = [&] {
    std::vector<double> ec(obj.constraints().size(), 0.0);
    for (std::size_t m = 0; m < M; ++m) {
      auto e = expected_constraints(obj, s.components[m]);
      for (std::size_t a = 0; a < ec.size(); ++a) ec[a] += s.q0[m] * e[a];
    }
    return ec;
  };

  auto observe = [&](Phase phase) {
    TraceRecord rec;
    rec.step = res.steps;
    rec.phase = phase;
    std::size_t min_viol = std::numeric_limits<std::size_t>::max();
    for (std::size_t m = 0; m < M; ++m) {
      res.modes[m] = mode(s.components[m]);
      std::size_t viol = violated_constraints(obj, res.modes[m]);
      double g = evaluate(obj, res.modes[m], false);
      if (detail::better(viol, g, res.best_violations[m], res.best_objective[m])) {
        res.best[m] = res.modes[m];
        res.best_violations[m] = viol;
        res.best_objective[m] = g;
      }
      min_viol = std::min(min_viol, viol);
      rec.component_violations.push_back(viol);
      rec.component_modes.push_back(to_string(res.modes[m]));
    }
    double temp = state.effective_temperature();
    res.js = js_variational(s);
    rec.js = res.js;
    rec.lagrangian = mixture_lagrangian(s, obj, temp);
    rec.expected_objective =
        component_average(s, [&](const ProductDistribution& q) { return expected_value(obj, q, false); });
    auto ec = expected_mix_constraints();
    rec.expected_violation = std::accumulate(ec.begin(), ec.end(), 0.0);
    rec.mode_violations = min_viol;
    state.emit(std::move(rec), res.trace);
    return std::all_of(res.modes.begin(), res.modes.end(),
                       [&](const JointConfiguration& x) { return violated_constraints(obj, x) == 0; });
  };

  auto finish = [&](Termination why) {
    res.reason = why;
    res.multipliers = state.raw_multipliers();
    res.final_temperature = state.effective_temperature();
    return res;
  };

  for (std::size_t outer = 0; outer < cfg.max_outer; ++outer) {
    for (;;) {
      bool all_satisfied = false;
      for (std::size_t k = 0; k < cfg.max_inner; ++k) {
        if (res.steps >= cfg.max_iterations) return finish(Termination::IterationCap);
        step();
        ++res.steps;
        all_satisfied = observe(Phase::Inner);
        if (constrained && all_satisfied) return finish(Termination::Solved);
        if (mixture_gradient_norm(s, obj, state.effective_temperature(), cfg.floor) < cfg.grad_tol) break;
      }
      auto ec = expected_mix_constraints();
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
