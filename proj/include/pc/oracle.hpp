#pragma once

// Exact references over enumerable joint spaces. Intended for tests and small demos.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <vector>

#include "pc/core.hpp"
#include "pc/error.hpp"
#include "pc/joint_space.hpp"
#include "pc/montecarlo.hpp"
#include "pc/objective.hpp"

namespace pc {

/// Effective objective (with weighted constraints) at every point, row-major.
inline std::vector<double> objective_table(const FactoredObjective& obj, bool include_constraints = true) {
  std::vector<double> g;
  g.reserve(joint_size(obj.arities()));
  for_each_configuration(obj.arities(),
                         [&](const JointConfiguration& x) { g.push_back(evaluate(obj, x, include_constraints)); });
  return g;
}

/// ln sum_x exp(-G(x)/T).
inline double log_partition(const FactoredObjective& obj, double temperature) {
  if (!(temperature > 0.0)) throw DomainError("log_partition: temperature must be positive");
  auto g = objective_table(obj);
  double lo = *std::min_element(g.begin(), g.end());
  double z = 0.0;
  for (double v : g) z += std::exp(-(v - lo) / temperature);
  return std::log(z) - lo / temperature;
}

/// p(x) = exp(-G(x)/T) / Z(T).
inline DenseDistribution exact_boltzmann(const FactoredObjective& obj, double temperature) {
  if (!(temperature > 0.0)) throw DomainError("exact_boltzmann: temperature must be positive");
  DenseDistribution p{obj.arities(), objective_table(obj)};
  double lo = *std::min_element(p.probs.begin(), p.probs.end());
  double z = 0.0;
  for (double& v : p.probs) z += (v = std::exp(-(v - lo) / temperature));
  for (double& v : p.probs) v /= z;
  return p;
}

/// Product of the single-agent marginals of a dense distribution.
inline ProductDistribution marginals(const DenseDistribution& p) {
  std::vector<Row> rows;
  for (auto a : p.arities) rows.emplace_back(a, 0.0);
  std::size_t idx = 0;
  for_each_configuration(p.arities, [&](const JointConfiguration& x) {
    for (std::size_t i = 0; i < x.size(); ++i) rows[i][x[i]] += p.probs[idx];
    ++idx;
  });
  for (auto& r : rows) {
    double s = 0.0;
    for (double v : r) s += v;
    for (double& v : r) v /= s;
  }
  return ProductDistribution::from_rows(std::move(rows));
}

inline ProductDistribution boltzmann_marginals(const FactoredObjective& obj, double temperature) {
  return marginals(exact_boltzmann(obj, temperature));
}

/// D(q || p) = sum_x q(x) ln(q(x)/p(x)).
inline double kl_qp(const ProductDistribution& q, const DenseDistribution& p) {
  if (q.arities() != p.arities) throw DimensionError("kl_qp: spaces differ");
  double d = 0.0;
  std::size_t idx = 0;
  for_each_configuration(p.arities, [&](const JointConfiguration& x) {
    double qx = q.prob(x);
    double px = p.probs[idx++];
    if (qx <= 0.0) return;
    if (px <= 0.0) throw DomainError("kl_qp: p vanishes where q does not");
    d += qx * std::log(qx / px);
  });
  return d;
}

/// E_q(G) by summing over every joint point.
inline double enumerated_expectation(const FactoredObjective& obj, const ProductDistribution& q,
                                     bool include_constraints = true) {
  check_distribution(obj, q);
  double e = 0.0;
  for_each_configuration(obj.arities(),
                         [&](const JointConfiguration& x) { e += q.prob(x) * evaluate(obj, x, include_constraints); });
  return e;
}

/// E_{q_-i}(G | x_i) by summing over every joint point.
inline Row enumerated_conditional(const FactoredObjective& obj, const ProductDistribution& q, std::size_t i,
                                  bool include_constraints = true) {
  check_distribution(obj, q);
  Row out(q.arity(i), 0.0);
  for_each_configuration(obj.arities(), [&](const JointConfiguration& x) {
    out[x[i]] += q.prob(x) / q(i, x[i]) * evaluate(obj, x, include_constraints);
  });
  return out;
}

struct ExhaustiveMinimum {
  JointConfiguration argmin;  // first in row-major order
  double value = std::numeric_limits<double>::infinity();
};

inline ExhaustiveMinimum exhaustive_minimum(const FactoredObjective& obj, bool include_constraints = true) {
  ExhaustiveMinimum best;
  for_each_configuration(obj.arities(), [&](const JointConfiguration& x) {
    double v = evaluate(obj, x, include_constraints);
    if (v < best.value) best = {x, v};
  });
  return best;
}

/// Var_{q_-i}(u(x_i, .)) for every move of agent i.
inline Row conditional_variance(const ProductDistribution& q, std::size_t i, const Utility& utility) {
  Row mean(q.arity(i), 0.0), second(q.arity(i), 0.0);
  for_each_configuration(q.arities(), [&](const JointConfiguration& x) {
    double w = q.prob(x) / q(i, x[i]);
    double u = utility(x);
    mean[x[i]] += w * u;
    second[x[i]] += w * u * u;
  });
  Row var(q.arity(i));
  for (std::size_t m = 0; m < var.size(); ++m) var[m] = std::max(second[m] - mean[m] * mean[m], 0.0);
  return var;
}

struct BlockMoments {
  Row cell_mean;        // E[g_hat_x]
  Row cell_variance;    // Var[g_hat_x]
  Row update_mean;      // expected random part of the update
  double update_variance = 0.0;  // summed over moves
};

inline constexpr std::size_t kMaxBlockOutcomes = std::size_t{1} << 20;

/// Exact moments of the per-move estimates and of the update's random part, over every block with the given
/// counts. Cells hold independent samples, so each cell's L_x-tuples of x_-i are enumerated separately.
/// Gradient rule: update_x = g_x - mean_y g_y. Nearest-Newton: update_x = q(x) (g_x - sum_y q(y) g_y).
inline BlockMoments enumerate_blocks_expectation(const ProductDistribution& q, std::size_t i,
                                                 std::span<const std::size_t> counts, const Utility& utility,
                                                 EstimatorRule rule) {
  const std::size_t n = q.arity(i);
  if (counts.size() != n) throw DimensionError("enumerate_blocks_expectation: one count per move");
  std::vector<std::size_t> others;
  for (std::size_t j = 0; j < q.agents(); ++j)
    if (j != i) others.push_back(q.arity(j));
  const std::size_t rest = joint_size(others);

  BlockMoments out{Row(n, 0.0), Row(n, 0.0), Row(n, 0.0), 0.0};
  for (std::size_t m = 0; m < n; ++m) {
    if (counts[m] == 0) throw EmptyCellError("enumerate_blocks_expectation: move with no samples");
    // per point of x_-i: probability and utility with x_i = m
    std::vector<double> prob(rest), value(rest);
    for (std::size_t r = 0; r < rest; ++r) {
      JointConfiguration x(std::vector<std::size_t>(q.agents(), 0));
      std::vector<std::size_t> local(others.size());
      decode(others, r, local);
      for (std::size_t j = 0, k = 0; j < q.agents(); ++j) x[j] = j == i ? m : local[k++];
      prob[r] = q.prob(x) / q(i, m);
      value[r] = utility(x);
    }
    std::vector<std::size_t> tuple_dims(counts[m], rest);
    joint_size(tuple_dims, kMaxBlockOutcomes);
    double e = 0.0, e2 = 0.0;
    for_each_configuration(
        tuple_dims,
        [&](const JointConfiguration& t) {
          double p = 1.0, s = 0.0;
          for (auto r : t.values) {
            p *= prob[r];
            s += value[r];
          }
          s /= static_cast<double>(counts[m]);
          e += p * s;
          e2 += p * s * s;
        },
        kMaxBlockOutcomes);
    out.cell_mean[m] = e;
    out.cell_variance[m] = std::max(e2 - e * e, 0.0);
  }

  // update = A g_hat with independent cells: mean A E[g], variance trace(A diag(V) A^T)
  auto r = q.row(i);
  auto coeff = [&](std::size_t x, std::size_t y) {
    if (rule == EstimatorRule::Gradient) return (x == y ? 1.0 : 0.0) - 1.0 / static_cast<double>(n);
    return r[x] * ((x == y ? 1.0 : 0.0) - r[y]);
  };
  for (std::size_t x = 0; x < n; ++x)
    for (std::size_t y = 0; y < n; ++y) {
      double a = coeff(x, y);
      out.update_mean[x] += a * out.cell_mean[y];
      out.update_variance += a * a * out.cell_variance[y];
    }
  return out;
}

}  // namespace pc
