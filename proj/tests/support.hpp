#pragma once

// Random instances and small helpers shared by the test suites.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <random>
#include <vector>

#include "pc/core.hpp"
#include "pc/mixture.hpp"
#include "pc/objective.hpp"

namespace pc::testing {

inline Row random_row(std::size_t arity, Rng& rng, double min_entry = 0.0) {
  std::uniform_real_distribution<double> u(0.05, 1.0);
  Row r(arity);
  double s = 0.0;
  for (double& v : r) s += (v = u(rng));
  for (double& v : r) v = v / s * (1.0 - min_entry * static_cast<double>(arity)) + min_entry;
  return r;
}

inline ProductDistribution random_product(const std::vector<std::size_t>& arities, Rng& rng) {
  std::vector<Row> rows;
  for (auto a : arities) rows.push_back(random_row(a, rng, 1e-3));
  return ProductDistribution::from_rows(std::move(rows));
}

inline std::vector<std::size_t> random_arities(std::size_t n, Rng& rng, std::size_t max_arity = 3) {
  std::uniform_int_distribution<std::size_t> a(2, max_arity);
  std::vector<std::size_t> out(n);
  for (auto& v : out) v = a(rng);
  return out;
}

/// Random factors over scopes of 1..max_scope distinct agents, optionally with random 0/1 constraints.
inline FactoredObjective random_objective(const std::vector<std::size_t>& arities, std::size_t factors, Rng& rng,
                                          std::size_t constraints = 0, std::size_t max_scope = 3) {
  FactoredObjective obj(arities);
  std::normal_distribution<double> value(0.0, 1.0);
  std::bernoulli_distribution coin(0.3);
  auto make = [&](bool binary) {
    std::uniform_int_distribution<std::size_t> size(1, std::min(max_scope, arities.size()));
    std::vector<std::size_t> pool(arities.size());
    for (std::size_t k = 0; k < pool.size(); ++k) pool[k] = k;
    std::shuffle(pool.begin(), pool.end(), rng);
    std::vector<std::size_t> scope(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(size(rng)));
    std::vector<std::size_t> dims;
    for (auto k : scope) dims.push_back(arities[k]);
    return Factor::tabulate(scope, dims, [&](std::span<const std::size_t>) {
      return binary ? (coin(rng) ? 1.0 : 0.0) : value(rng);
    });
  };
  for (std::size_t f = 0; f < factors; ++f) obj.add_factor(make(false));
  for (std::size_t c = 0; c < constraints; ++c) obj.add_constraint(make(true));
  if (constraints > 0) {
    std::uniform_real_distribution<double> lam(0.1, 2.0);
    std::vector<double> l(constraints);
    for (double& v : l) v = lam(rng);
    obj.set_multipliers(l);
  }
  return obj;
}

/// Random mixture state with arbitrary (not optimal) w and nu.
inline MixtureState random_mixture(std::size_t components, const std::vector<std::size_t>& arities, Rng& rng) {
  MixtureState s;
  s.q0 = random_row(components, rng, 1e-3);
  std::uniform_real_distribution<double> nu(0.2, 3.0);
  for (std::size_t m = 0; m < components; ++m) {
    s.components.push_back(random_product(arities, rng));
    std::vector<Row> w;
    for (auto a : arities) w.push_back(random_row(a, rng, 1e-3));
    s.w.push_back(std::move(w));
    s.nu.push_back(nu(rng));
  }
  return s;
}

/// Unit-norm direction that keeps the row sum fixed.
inline Row tangent_direction(std::size_t arity, Rng& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  Row d(arity);
  double mean = 0.0;
  for (double& v : d) mean += (v = g(rng));
  mean /= static_cast<double>(arity);
  double n = 0.0;
  for (double& v : d) {
    v -= mean;
    n += v * v;
  }
  for (double& v : d) v /= std::sqrt(n);
  return d;
}

}  // namespace pc::testing
