#pragma once

// Sample-block estimates of per-move conditional expectations, and the
// difference utilities (aristocrat, wonderful-life) that lower their variance.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <numeric>
#include <span>
#include <vector>

#include "pc/aging.hpp"
#include "pc/core.hpp"
#include "pc/error.hpp"
#include "pc/joint_space.hpp"
#include "pc/objective.hpp"

namespace pc {

/// L joint samples drawn from one snapshot of q, with per-agent move counts.
struct SampleBlock {
  ProductDistribution source;
  std::vector<JointConfiguration> samples;
  std::vector<double> values;                    // effective objective at each sample
  std::vector<std::vector<std::size_t>> counts;  // counts[i][move]

  std::size_t size() const { return samples.size(); }
};

inline SampleBlock draw_block(const ProductDistribution& q, const FactoredObjective& obj, std::size_t samples,
                              Rng& rng) {
  check_distribution(obj, q);
  if (samples == 0) throw DomainError("draw_block: need at least one sample");
  SampleBlock b{q, {}, {}, {}};
  b.counts.resize(q.agents());
  for (std::size_t i = 0; i < q.agents(); ++i) b.counts[i].assign(q.arity(i), 0);
  b.samples.reserve(samples);
  b.values.reserve(samples);
  for (std::size_t s = 0; s < samples; ++s) {
    JointConfiguration x = sample(q, rng);
    for (std::size_t i = 0; i < x.size(); ++i) ++b.counts[i][x[i]];
    b.values.push_back(evaluate(obj, x));
    b.samples.push_back(std::move(x));
  }
  return b;
}

/// What to do when some move of the estimating agent was never sampled.
enum class EmptyCellPolicy {
  Error,        // throw EmptyCellError
  Smooth,       // counterfactual average over the block; aristocrat weights use q_i(x) L
  ForceSample,  // draw one extra counterfactual sample for the empty move
};

using Utility = std::function<double(const JointConfiguration&)>;

/// The effective objective itself.
inline Utility raw_utility(const FactoredObjective& obj) {
  return [&obj](const JointConfiguration& x) { return evaluate(obj, x); };
}

/// Weighted average of G over agent i's moves with the rest of x held: sum_m w_m G(m, x_-i) / sum_m w_m.
inline double counterfactual_average(const FactoredObjective& obj, std::size_t i, std::span<const double> weights,
                                     const JointConfiguration& x) {
  JointConfiguration y = x;
  double num = 0.0, den = 0.0;
  for (std::size_t m = 0; m < weights.size(); ++m) {
    y[i] = m;
    num += weights[m] * evaluate(obj, y);
    den += weights[m];
  }
  return num / den;
}

/// G(x) - D(x_-i) for an arbitrary baseline D that ignores x_i.
inline Utility difference_utility(const FactoredObjective& obj, std::function<double(const JointConfiguration&)> baseline) {
  return [&obj, baseline = std::move(baseline)](const JointConfiguration& x) { return evaluate(obj, x) - baseline(x); };
}

/// G(x) - sum_m w_m G(m, x_-i) / sum_m w_m.
inline Utility aristocrat_utility(const FactoredObjective& obj, std::size_t i, Row weights) {
  return [&obj, i, weights = std::move(weights)](const JointConfiguration& x) {
    return evaluate(obj, x) - counterfactual_average(obj, i, weights, x);
  };
}

/// G(x) - G(clamp, x_-i).
inline Utility wonderful_life_utility(const FactoredObjective& obj, std::size_t i, std::size_t clamp) {
  if (clamp >= obj.arities().at(i)) throw DomainError("wonderful_life_utility: clamp outside the agent's moves");
  return [&obj, i, clamp](const JointConfiguration& x) {
    JointConfiguration y = x;
    y[i] = clamp;
    return evaluate(obj, x) - evaluate(obj, y);
  };
}

/// 1/L_x for the gradient rule; empty cells follow the policy (q_i(x) L when smoothing).
inline Row au_weights(const SampleBlock& block, std::size_t i, EmptyCellPolicy policy = EmptyCellPolicy::Smooth,
                      bool smooth_counts = false) {
  const auto& counts = block.counts.at(i);
  bool empty = std::any_of(counts.begin(), counts.end(), [](std::size_t c) { return c == 0; });
  if (empty && policy == EmptyCellPolicy::Error) throw EmptyCellError("au_weights: move with no samples");
  Row w(counts.size());
  const double total = static_cast<double>(block.size());
  for (std::size_t m = 0; m < counts.size(); ++m) {
    if (smooth_counts || (empty && policy == EmptyCellPolicy::Smooth))
      w[m] = 1.0 / (block.source(i, m) * total);
    else
      w[m] = 1.0 / static_cast<double>(std::max<std::size_t>(counts[m], 1));
  }
  return w;
}

/// Weights that make the baseline minimize the variance of the Nearest-Newton update:
/// q(x)^2 / L_x * ((1 - q(x))^2 + sum_{x' != x} q(x')^2).
inline Row nn_au_weights(std::span<const double> row, std::span<const std::size_t> counts) {
  if (row.size() != counts.size()) throw DimensionError("nn_au_weights: row/count length mismatch");
  double sq = 0.0;
  for (double p : row) sq += p * p;
  Row w(row.size());
  for (std::size_t m = 0; m < row.size(); ++m) {
    if (counts[m] == 0) throw EmptyCellError("nn_au_weights: move with no samples");
    double others = sq - row[m] * row[m];
    w[m] = row[m] * row[m] / static_cast<double>(counts[m]) * ((1.0 - row[m]) * (1.0 - row[m]) + others);
  }
  return w;
}

struct AristocratValues {
  std::vector<double> utility;   // g at each sample
  std::vector<double> baseline;  // D at each sample
};

inline AristocratValues au_utility(const SampleBlock& block, const FactoredObjective& obj, std::size_t i,
                                   EmptyCellPolicy policy = EmptyCellPolicy::Smooth) {
  Row w = au_weights(block, i, policy);
  AristocratValues out;
  for (std::size_t s = 0; s < block.size(); ++s) {
    double d = counterfactual_average(obj, i, w, block.samples[s]);
    out.baseline.push_back(d);
    out.utility.push_back(block.values[s] - d);
  }
  return out;
}

/// Least-sampled move (lowest index on ties).
inline std::size_t wlu_clamp(const SampleBlock& block, std::size_t i) {
  const auto& c = block.counts.at(i);
  return static_cast<std::size_t>(std::min_element(c.begin(), c.end()) - c.begin());
}

/// Least probable move under q (lowest index on ties).
inline std::size_t wlu_clamp(const ProductDistribution& q, std::size_t i) {
  auto r = q.row(i);
  return static_cast<std::size_t>(std::min_element(r.begin(), r.end()) - r.begin());
}

inline std::vector<double> wlu_utility(const SampleBlock& block, const FactoredObjective& obj, std::size_t i,
                                       std::size_t clamp) {
  Utility u = wonderful_life_utility(obj, i, clamp);
  std::vector<double> out;
  out.reserve(block.size());
  for (const auto& x : block.samples) out.push_back(u(x));
  return out;
}

/// Per-move sample means of the utility over the block.
inline Row ml_conditional_estimate(const SampleBlock& block, std::size_t i, const Utility& utility,
                                   EmptyCellPolicy policy = EmptyCellPolicy::Smooth, Rng* rng = nullptr) {
  const auto& counts = block.counts.at(i);
  Row sum(counts.size(), 0.0);
  for (std::size_t s = 0; s < block.size(); ++s) sum[block.samples[s][i]] += utility(block.samples[s]);
  for (std::size_t m = 0; m < counts.size(); ++m) {
    if (counts[m] > 0) {
      sum[m] /= static_cast<double>(counts[m]);
      continue;
    }
    switch (policy) {
      case EmptyCellPolicy::Error: throw EmptyCellError("ml_conditional_estimate: move with no samples");
      case EmptyCellPolicy::Smooth: {
        for (JointConfiguration y : block.samples) {
          y[i] = m;
          sum[m] += utility(y);
        }
        sum[m] /= static_cast<double>(block.size());
        break;
      }
      case EmptyCellPolicy::ForceSample: {
        if (!rng) throw DomainError("ml_conditional_estimate: forcing a sample needs an rng");
        JointConfiguration y = sample(block.source, *rng);
        y[i] = m;
        sum[m] = utility(y);
        break;
      }
    }
  }
  return sum;
}

/// Raw-objective estimate, reusing the stored sample values.
inline Row ml_conditional_estimate(const SampleBlock& block, const FactoredObjective& obj, std::size_t i,
                                   EmptyCellPolicy policy = EmptyCellPolicy::Smooth, Rng* rng = nullptr) {
  const auto& counts = block.counts.at(i);
  if (std::all_of(counts.begin(), counts.end(), [](std::size_t c) { return c > 0; })) {
    Row sum(counts.size(), 0.0);
    for (std::size_t s = 0; s < block.size(); ++s) sum[block.samples[s][i]] += block.values[s];
    for (std::size_t m = 0; m < counts.size(); ++m) sum[m] /= static_cast<double>(counts[m]);
    return sum;
  }
  return ml_conditional_estimate(block, i, raw_utility(obj), policy, rng);
}

enum class EstimatorRule { Gradient, NearestNewton };

/// Total variance of the random part of one agent's update, given Var(g | move) and the counts.
/// Gradient: (n-1)/n sum_x Var_x / L_x. Nearest-Newton: sum_x Var_x q(x)^2/L_x ((1-q(x))^2 + sum_{x'!=x} q(x')^2).
inline double update_variance(EstimatorRule rule, std::span<const double> row, std::span<const std::size_t> counts,
                              std::span<const double> cell_variance) {
  const std::size_t n = counts.size();
  if (row.size() != n || cell_variance.size() != n) throw DimensionError("update_variance: length mismatch");
  if (rule == EstimatorRule::NearestNewton) {
    Row w = nn_au_weights(row, counts);
    double v = 0.0;
    for (std::size_t m = 0; m < n; ++m) v += w[m] * cell_variance[m];
    return v;
  }
  double v = 0.0;
  for (std::size_t m = 0; m < n; ++m) {
    if (counts[m] == 0) throw EmptyCellError("update_variance: move with no samples");
    v += cell_variance[m] / static_cast<double>(counts[m]);
  }
  return v * static_cast<double>(n - 1) / static_cast<double>(n);
}

}  // namespace pc
