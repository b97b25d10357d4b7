#pragma once

// Factored objectives G(x) + sum_a lambda_a c_a(x) with closed-form
// conditional expectations under product distributions.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <set>
#include <span>
#include <utility>
#include <vector>

#include "pc/core.hpp"
#include "pc/error.hpp"
#include "pc/joint_space.hpp"

namespace pc {

/// Largest dense factor table (2^20 entries, i.e. 20 binary variables).
inline constexpr std::size_t kMaxFactorTable = std::size_t{1} << 20;

/// Dense real-valued table over the joint moves of a small agent scope.
class Factor {
 public:
  Factor() = default;

  Factor(std::vector<std::size_t> scope, std::vector<std::size_t> dims, std::vector<double> table)
      : scope_(std::move(scope)), dims_(std::move(dims)), table_(std::move(table)) {
    if (scope_.size() != dims_.size()) throw DimensionError("Factor: scope/dims length mismatch");
    std::set<std::size_t> seen(scope_.begin(), scope_.end());
    if (seen.size() != scope_.size()) throw DomainError("Factor: duplicate agent in scope");
    if (joint_size(dims_, kMaxFactorTable) != table_.size())
      throw DimensionError("Factor: table size does not match scope dims");
    for (double v : table_)
      if (!std::isfinite(v)) throw DomainError("Factor: non-finite table entry");
  }

  /// Tabulates `fn(std::span<const std::size_t> local_moves)` over the scope.
  template <class Fn>
  static Factor tabulate(std::vector<std::size_t> scope, std::vector<std::size_t> dims, Fn&& fn) {
    std::size_t size = joint_size(dims, kMaxFactorTable);
    std::vector<double> table;
    table.reserve(size);
    for_each_configuration(
        dims, [&](const JointConfiguration& local) { table.push_back(fn(std::span<const std::size_t>(local.values))); },
        kMaxFactorTable);
    return Factor(std::move(scope), std::move(dims), std::move(table));
  }

  const std::vector<std::size_t>& scope() const { return scope_; }
  const std::vector<std::size_t>& dims() const { return dims_; }
  const std::vector<double>& table() const { return table_; }

  std::optional<std::size_t> position_of(std::size_t agent) const {
    auto it = std::find(scope_.begin(), scope_.end(), agent);
    if (it == scope_.end()) return std::nullopt;
    return static_cast<std::size_t>(it - scope_.begin());
  }

  std::size_t index_of(const JointConfiguration& x) const {
    std::size_t idx = 0;
    for (std::size_t k = 0; k < scope_.size(); ++k) idx = idx * dims_[k] + x[scope_[k]];
    return idx;
  }

  double value(const JointConfiguration& x) const { return table_[index_of(x)]; }

  /// E_q[f].
  double expectation(const ProductDistribution& q) const {
    double total = 0.0;
    std::vector<std::size_t> local(scope_.size(), 0);
    std::size_t idx = 0;
    do {
      double w = 1.0;
      for (std::size_t k = 0; k < scope_.size(); ++k) w *= q(scope_[k], local[k]);
      total += w * table_[idx++];
    } while (next_configuration(dims_, local));
    return total;
  }

  /// out[x_p] += weight * sum over the other scope moves of prod q * f, where p = scope_[pos].
  void accumulate_conditional(const ProductDistribution& q, std::size_t pos, std::span<double> out,
                              double weight = 1.0) const {
    std::vector<std::size_t> local(scope_.size(), 0);
    std::size_t idx = 0;
    do {
      double w = weight;
      for (std::size_t k = 0; k < scope_.size(); ++k)
        if (k != pos) w *= q(scope_[k], local[k]);
      out[local[pos]] += w * table_[idx++];
    } while (next_configuration(dims_, local));
  }

 private:
  std::vector<std::size_t> scope_;
  std::vector<std::size_t> dims_;
  std::vector<double> table_;
};

/// Reference to a factor held by a FactoredObjective.
struct FactorRef {
  bool constraint;
  std::size_t index;
};

/// G(x) as a sum of base factors, plus equality constraints c_a weighted by multipliers.
class FactoredObjective {
 public:
  FactoredObjective() = default;

  explicit FactoredObjective(std::vector<std::size_t> arities) : arities_(std::move(arities)) {
    if (arities_.empty()) throw DimensionError("FactoredObjective: need at least one agent");
    for (auto a : arities_)
      if (a == 0) throw DimensionError("FactoredObjective: zero arity");
    touching_.resize(arities_.size());
  }

  std::size_t agents() const { return arities_.size(); }
  const std::vector<std::size_t>& arities() const { return arities_; }
  const std::vector<Factor>& factors() const { return factors_; }
  const std::vector<Factor>& constraints() const { return constraints_; }
  const std::vector<double>& multipliers() const { return lambda_; }
  const std::vector<FactorRef>& touching(std::size_t agent) const { return touching_[agent]; }
  const Factor& factor(FactorRef ref) const { return ref.constraint ? constraints_[ref.index] : factors_[ref.index]; }
  double weight(FactorRef ref) const { return ref.constraint ? lambda_[ref.index] : 1.0; }

  void add_factor(Factor f) {
    check(f);
    for (auto a : f.scope()) touching_[a].push_back({false, factors_.size()});
    factors_.push_back(std::move(f));
  }

  /// Adds a constraint residual factor; multipliers are reset to 1/C.
  void add_constraint(Factor c) {
    check(c);
    for (auto a : c.scope()) touching_[a].push_back({true, constraints_.size()});
    constraints_.push_back(std::move(c));
    reset_multipliers();
  }

  void reset_multipliers() {
    lambda_.assign(constraints_.size(), constraints_.empty() ? 0.0 : 1.0 / static_cast<double>(constraints_.size()));
  }

  void set_multipliers(std::vector<double> lambda) {
    if (lambda.size() != constraints_.size()) throw DimensionError("set_multipliers: length mismatch");
    for (double l : lambda)
      if (!std::isfinite(l)) throw DomainError("set_multipliers: non-finite multiplier");
    lambda_ = std::move(lambda);
  }

 private:
  void check(const Factor& f) const {
    for (std::size_t k = 0; k < f.scope().size(); ++k) {
      if (f.scope()[k] >= arities_.size()) throw DimensionError("factor scope index out of range");
      if (f.dims()[k] != arities_[f.scope()[k]]) throw DimensionError("factor dims disagree with agent arity");
    }
  }

  std::vector<std::size_t> arities_;
  std::vector<Factor> factors_;
  std::vector<Factor> constraints_;
  std::vector<double> lambda_;
  std::vector<std::vector<FactorRef>> touching_;
};

inline void check_configuration(const FactoredObjective& obj, const JointConfiguration& x) {
  if (x.size() != obj.agents()) throw DimensionError("configuration length does not match objective");
  for (std::size_t i = 0; i < x.size(); ++i)
    if (x[i] >= obj.arities()[i]) throw DimensionError("configuration move out of range");
}

inline void check_distribution(const FactoredObjective& obj, const ProductDistribution& q) {
  if (q.arities() != obj.arities()) throw DimensionError("distribution arities do not match objective");
}

/// G(x), or G(x) + sum_a lambda_a c_a(x) when constraints are included.
inline double evaluate(const FactoredObjective& obj, const JointConfiguration& x, bool include_constraints = true) {
  check_configuration(obj, x);
  double g = 0.0;
  for (const auto& f : obj.factors()) g += f.value(x);
  if (include_constraints)
    for (std::size_t a = 0; a < obj.constraints().size(); ++a) g += obj.multipliers()[a] * obj.constraints()[a].value(x);
  return g;
}

/// Number of constraints with a nonzero residual at x.
inline std::size_t violated_constraints(const FactoredObjective& obj, const JointConfiguration& x) {
  check_configuration(obj, x);
  std::size_t n = 0;
  for (const auto& c : obj.constraints()) n += c.value(x) != 0.0;
  return n;
}

/// E_q(c_a) for every constraint.
inline std::vector<double> expected_constraints(const FactoredObjective& obj, const ProductDistribution& q) {
  check_distribution(obj, q);
  std::vector<double> out;
  out.reserve(obj.constraints().size());
  for (const auto& c : obj.constraints()) out.push_back(c.expectation(q));
  return out;
}

/// Contribution of the factors containing agent i to E(G|x_i); differs from the
/// full conditional expectation by a constant independent of x_i.
inline Row local_conditional_expectation(const FactoredObjective& obj, const ProductDistribution& q, std::size_t i,
                                         bool include_constraints = true) {
  Row out(obj.arities()[i], 0.0);
  for (auto ref : obj.touching(i)) {
    if (ref.constraint && !include_constraints) continue;
    const Factor& f = obj.factor(ref);
    f.accumulate_conditional(q, *f.position_of(i), out, obj.weight(ref));
  }
  return out;
}

/// E_{q_{-i}}(G | x_i) for every move of agent i, exact.
inline Row conditional_expectation(const FactoredObjective& obj, const ProductDistribution& q, std::size_t i,
                                   bool include_constraints = true) {
  check_distribution(obj, q);
  if (i >= obj.agents()) throw DimensionError("conditional_expectation: agent out of range");
  Row out = local_conditional_expectation(obj, q, i, include_constraints);
  double constant = 0.0;
  for (const auto& f : obj.factors())
    if (!f.position_of(i)) constant += f.expectation(q);
  if (include_constraints)
    for (std::size_t a = 0; a < obj.constraints().size(); ++a)
      if (!obj.constraints()[a].position_of(i)) constant += obj.multipliers()[a] * obj.constraints()[a].expectation(q);
  for (double& v : out) v += constant;
  return out;
}

/// E_q(G) (with weighted constraints unless disabled).
inline double expected_value(const FactoredObjective& obj, const ProductDistribution& q,
                             bool include_constraints = true) {
  check_distribution(obj, q);
  double e = 0.0;
  for (const auto& f : obj.factors()) e += f.expectation(q);
  if (include_constraints)
    for (std::size_t a = 0; a < obj.constraints().size(); ++a)
      e += obj.multipliers()[a] * obj.constraints()[a].expectation(q);
  return e;
}

/// Maxent Lagrangian E_q(G + lambda.c) - T S(q).
inline double lagrangian(const FactoredObjective& obj, const ProductDistribution& q, double temperature) {
  if (!(temperature > 0.0)) throw DomainError("lagrangian: temperature must be positive");
  return expected_value(obj, q) - temperature * entropy(q);
}

/// Gradient block of one agent, centered so that it sums to zero.
inline Row centered_gradient_row(std::span<const double> cond, std::span<const double> row, double temperature) {
  Row g(row.size());
  double mean = 0.0;
  for (std::size_t k = 0; k < row.size(); ++k) {
    g[k] = cond[k] + temperature * std::log(row[k]);
    mean += g[k];
  }
  mean /= static_cast<double>(row.size());
  for (double& v : g) v -= mean;
  return g;
}

/// dL/dq_i(x_i) = E(G|x_i) + T ln q_i(x_i), minus the per-agent mean.
inline std::vector<Row> gradient(const FactoredObjective& obj, const ProductDistribution& q, double temperature,
                                 unsigned threads = 1) {
  check_distribution(obj, q);
  std::vector<Row> grad(q.agents());
  parallel_for(q.agents(), threads, [&](std::size_t i) {
    grad[i] = centered_gradient_row(local_conditional_expectation(obj, q, i), q.row(i), temperature);
  });
  return grad;
}

/// Centered gradient restricted to the floored simplex: entries pinned at the floor whose gradient
/// pushes them further down are dropped and the rest re-centered. Zero at any floored Brouwer fixed point.
inline Row projected_gradient_row(std::span<const double> cond, std::span<const double> row, double temperature,
                                  double floor = kDefaultFloor) {
  Row g(row.size());
  for (std::size_t k = 0; k < row.size(); ++k) g[k] = cond[k] + temperature * std::log(row[k]);
  std::vector<bool> free(row.size(), true);
  for (;;) {
    double mean = 0.0;
    std::size_t count = 0;
    for (std::size_t k = 0; k < row.size(); ++k)
      if (free[k]) {
        mean += g[k];
        ++count;
      }
    mean /= static_cast<double>(count);
    bool changed = false;
    for (std::size_t k = 0; k < row.size(); ++k)
      if (free[k] && count > 1 && row[k] <= floor * (1.0 + 1e-9) && g[k] - mean > 0.0) {
        free[k] = false;
        changed = true;
      }
    if (changed) continue;
    Row out(row.size(), 0.0);
    for (std::size_t k = 0; k < row.size(); ++k)
      if (free[k]) out[k] = g[k] - mean;
    return out;
  }
}

inline std::vector<Row> projected_gradient(const FactoredObjective& obj, const ProductDistribution& q,
                                           double temperature, double floor = kDefaultFloor, unsigned threads = 1) {
  check_distribution(obj, q);
  std::vector<Row> grad(q.agents());
  parallel_for(q.agents(), threads, [&](std::size_t i) {
    grad[i] = projected_gradient_row(local_conditional_expectation(obj, q, i), q.row(i), temperature, floor);
  });
  return grad;
}

inline double norm2(const std::vector<Row>& blocks) {
  double s = 0.0;
  for (const auto& b : blocks)
    for (double v : b) s += v * v;
  return std::sqrt(s);
}

/// Agent adjacency induced by shared factor scopes.
class FactorGraph {
 public:
  explicit FactorGraph(const FactoredObjective& obj) : neighbors_(obj.agents()) {
    auto link = [&](const Factor& f) {
      for (auto a : f.scope())
        for (auto b : f.scope())
          if (a != b) neighbors_[a].push_back(b);
    };
    for (const auto& f : obj.factors()) link(f);
    for (const auto& c : obj.constraints()) link(c);
    for (auto& nb : neighbors_) {
      std::sort(nb.begin(), nb.end());
      nb.erase(std::unique(nb.begin(), nb.end()), nb.end());
    }
  }

  std::size_t agents() const { return neighbors_.size(); }
  const std::vector<std::size_t>& neighbors(std::size_t i) const { return neighbors_[i]; }

  bool adjacent(std::size_t a, std::size_t b) const {
    return std::binary_search(neighbors_[a].begin(), neighbors_[a].end(), b);
  }

  double mean_degree() const {
    double total = 0.0;
    for (const auto& nb : neighbors_) total += static_cast<double>(nb.size());
    return total / static_cast<double>(neighbors_.size());
  }

 private:
  std::vector<std::vector<std::size_t>> neighbors_;
};

}  // namespace pc
