#pragma once

// Finite-domain product distributions q(x) = prod_i q_i(x_i) and the simplex
// arithmetic shared by every solver.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <random>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "pc/error.hpp"
#include "pc/joint_space.hpp"

namespace pc {

using Row = std::vector<double>;
using Rng = std::mt19937_64;

inline constexpr double kDefaultFloor = 1e-12;
inline constexpr double kRowSumTolerance = 1e-9;

/// Per-agent probability rows over finite move sets.
class ProductDistribution {
 public:
  ProductDistribution() = default;

  static ProductDistribution uniform(std::vector<std::size_t> arities) {
    if (arities.empty()) throw DimensionError("ProductDistribution: need at least one agent");
    ProductDistribution q;
    q.rows_.reserve(arities.size());
    for (auto a : arities) {
      if (a == 0) throw DimensionError("ProductDistribution: zero arity");
      q.rows_.emplace_back(a, 1.0 / static_cast<double>(a));
    }
    q.arities_ = std::move(arities);
    return q;
  }

  /// Rows must be nonnegative and sum to one (within 1e-9); they are stored as given.
  static ProductDistribution from_rows(std::vector<Row> rows) {
    if (rows.empty()) throw DimensionError("ProductDistribution: need at least one agent");
    ProductDistribution q;
    for (const auto& r : rows) check_row(r);
    q.arities_.reserve(rows.size());
    for (const auto& r : rows) q.arities_.push_back(r.size());
    q.rows_ = std::move(rows);
    return q;
  }

  std::size_t agents() const { return rows_.size(); }
  std::size_t arity(std::size_t i) const { return arities_[i]; }
  const std::vector<std::size_t>& arities() const { return arities_; }
  std::span<const double> row(std::size_t i) const { return rows_[i]; }
  double operator()(std::size_t i, std::size_t move) const { return rows_[i][move]; }

  void set_row(std::size_t i, Row r) {
    if (r.size() != arities_[i]) throw DimensionError("set_row: arity mismatch");
    check_row(r);
    rows_[i] = std::move(r);
  }

  /// Joint probability of a full configuration.
  double prob(const JointConfiguration& x) const {
    if (x.size() != agents()) throw DimensionError("prob: configuration length mismatch");
    double p = 1.0;
    for (std::size_t i = 0; i < agents(); ++i) p *= rows_[i][x[i]];
    return p;
  }

  bool operator==(const ProductDistribution&) const = default;

 private:
  static void check_row(const Row& r) {
    if (r.empty()) throw DimensionError("ProductDistribution: empty row");
    double s = 0.0;
    for (double v : r) {
      if (!(v >= 0.0) || !std::isfinite(v)) throw DomainError("ProductDistribution: negative or non-finite entry");
      s += v;
    }
    if (std::abs(s - 1.0) > kRowSumTolerance) throw DomainError("ProductDistribution: row does not sum to 1");
  }

  std::vector<Row> rows_;
  std::vector<std::size_t> arities_;
};

inline double row_entropy(std::span<const double> r) {
  double s = 0.0;
  for (double p : r)
    if (p > 0.0) s -= p * std::log(p);
  return s;
}

/// Sum of per-agent Shannon entropies, with 0 ln 0 = 0.
inline double entropy(const ProductDistribution& q) {
  double s = 0.0;
  for (std::size_t i = 0; i < q.agents(); ++i) s += row_entropy(q.row(i));
  return s;
}

/// Independent draw of every agent's move.
inline JointConfiguration sample(const ProductDistribution& q, Rng& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  JointConfiguration x(std::vector<std::size_t>(q.agents(), 0));
  for (std::size_t i = 0; i < q.agents(); ++i) {
    auto r = q.row(i);
    double u = unit(rng);
    std::size_t pick = r.size() - 1;
    while (pick > 0 && r[pick] == 0.0) --pick;  // last move with support
    double acc = 0.0;
    for (std::size_t k = 0; k < r.size(); ++k) {
      acc += r[k];
      if (u < acc) {
        pick = k;
        break;
      }
    }
    x[i] = pick;
  }
  return x;
}

/// Most probable joint configuration; ties go to the lowest move index.
inline JointConfiguration mode(const ProductDistribution& q) {
  JointConfiguration x(std::vector<std::size_t>(q.agents(), 0));
  for (std::size_t i = 0; i < q.agents(); ++i) {
    auto r = q.row(i);
    x[i] = static_cast<std::size_t>(std::max_element(r.begin(), r.end()) - r.begin());
  }
  return x;
}

/// Euclidean projection onto the probability simplex (sort-based).
inline Row simplex_projection(std::span<const double> v) {
  if (v.empty()) throw DimensionError("simplex_projection: empty vector");
  for (double x : v)
    if (!std::isfinite(x)) throw DomainError("simplex_projection: non-finite entry");
  Row u(v.begin(), v.end());
  std::sort(u.begin(), u.end(), std::greater<>());
  double cumsum = 0.0, theta = 0.0;
  for (std::size_t j = 0; j < u.size(); ++j) {
    cumsum += u[j];
    double t = (cumsum - 1.0) / static_cast<double>(j + 1);
    if (u[j] - t > 0.0) theta = t;
  }
  Row out(v.size());
  for (std::size_t k = 0; k < v.size(); ++k) out[k] = std::max(v[k] - theta, 0.0);
  return out;
}

/// Lifts entries below `floor` to exactly `floor` and rescales the rest so the row sums to one.
inline void apply_floor(Row& r, double floor = kDefaultFloor) {
  if (r.size() == 1) {
    r[0] = 1.0;
    return;
  }
  if (floor * static_cast<double>(r.size()) >= 1.0) throw DomainError("apply_floor: floor too large for arity");
  std::vector<bool> pinned(r.size(), false);
  for (;;) {
    std::size_t n_pinned = 0;
    double free_mass = 0.0;
    for (std::size_t k = 0; k < r.size(); ++k) {
      if (pinned[k]) ++n_pinned;
      else free_mass += r[k];
    }
    double target = 1.0 - static_cast<double>(n_pinned) * floor;
    bool changed = false;
    for (std::size_t k = 0; k < r.size(); ++k) {
      if (pinned[k]) {
        r[k] = floor;
        continue;
      }
      double scaled = free_mass > 0.0 ? r[k] * target / free_mass
                                      : target / static_cast<double>(r.size() - n_pinned);
      if (scaled < floor) {
        pinned[k] = true;
        changed = true;
      }
      r[k] = scaled;
    }
    if (!changed) return;
  }
}

/// Projection onto the simplex followed by the probability floor.
inline Row simplex_repair(std::span<const double> v, double floor = kDefaultFloor) {
  Row r = simplex_projection(v);
  apply_floor(r, floor);
  return r;
}

/// Boltzmann row p(k) ∝ exp(-energy(k)/T), computed with min-subtraction.
inline Row boltzmann_row(std::span<const double> energy, double temperature, double floor = kDefaultFloor) {
  if (!(temperature > 0.0)) throw DomainError("boltzmann_row: temperature must be positive");
  double lo = *std::min_element(energy.begin(), energy.end());
  Row r(energy.size());
  double z = 0.0;
  for (std::size_t k = 0; k < energy.size(); ++k) {
    r[k] = std::exp(-(energy[k] - lo) / temperature);
    z += r[k];
  }
  for (double& p : r) p /= z;
  apply_floor(r, floor);
  return r;
}

enum class AnnealMode { LambdaRescale, Geometric };

struct SolverConfig {
  double temperature = 1.0;
  double step_q = 0.1;
  double step_lambda = 0.5;
  double grad_tol = 1e-6;
  double violation_tol = 1e-3;
  std::size_t max_inner = 2000;
  std::size_t max_iterations = 100000;
  std::size_t max_outer = 10000;
  AnnealMode anneal = AnnealMode::LambdaRescale;
  double cooling = 0.9;
  double min_temperature = 1e-6;
  std::uint64_t seed = 0;
  double floor = kDefaultFloor;
  unsigned threads = 1;

  double beta() const { return 1.0 / temperature; }

  void validate() const {
    if (!(temperature > 0.0)) throw DomainError("SolverConfig: temperature must be positive");
    if (!(step_q > 0.0) || !(step_lambda > 0.0)) throw DomainError("SolverConfig: step sizes must be positive");
    if (max_inner < 1 || max_iterations < 1 || max_outer < 1) throw DomainError("SolverConfig: caps must be >= 1");
    if (!(cooling > 0.0 && cooling < 1.0)) throw DomainError("SolverConfig: cooling factor must lie in (0,1)");
    if (!(floor > 0.0 && floor < 1e-3)) throw DomainError("SolverConfig: floor out of range");
    if (threads < 1) throw DomainError("SolverConfig: threads must be >= 1");
  }
};

/// Runs fn(k) for k in [0,n) over up to `threads` workers; fn must only touch slot k.
template <class Fn>
void parallel_for(std::size_t n, unsigned threads, Fn&& fn) {
  if (threads <= 1 || n < 2 * threads) {
    for (std::size_t k = 0; k < n; ++k) fn(k);
    return;
  }
  std::vector<std::jthread> pool;
  pool.reserve(threads);
  for (unsigned t = 0; t < threads; ++t) {
    pool.emplace_back([&, t] {
      for (std::size_t k = t; k < n; k += threads) fn(k);
    });
  }
}

}  // namespace pc
