#pragma once

// Semicoordinate systems: onto maps from a product space X to a coupled space Z.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <numeric>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "pc/core.hpp"
#include "pc/error.hpp"
#include "pc/joint_space.hpp"
#include "pc/objective.hpp"

namespace pc {

enum class MapKind { Identity, JointPermutation, BayesNet, MixtureEmbedding };

/// Onto map zeta: X -> Z with, per Z coordinate, the X coordinates it reads.
class SemicoordinateMap {
 public:
  using Forward = std::function<void(std::span<const std::size_t> x, std::span<std::size_t> z)>;

  SemicoordinateMap(MapKind kind, std::vector<std::size_t> x_arities, std::vector<std::size_t> z_arities,
                    Forward forward, std::vector<std::vector<std::size_t>> reads)
      : kind_(kind), x_arities_(std::move(x_arities)), z_arities_(std::move(z_arities)),
        forward_(std::move(forward)), reads_(std::move(reads)) {
    if (reads_.size() != z_arities_.size()) throw DimensionError("SemicoordinateMap: one read set per Z coordinate");
    for (auto& r : reads_) {
      std::sort(r.begin(), r.end());
      r.erase(std::unique(r.begin(), r.end()), r.end());
      for (auto k : r)
        if (k >= x_arities_.size()) throw DimensionError("SemicoordinateMap: read index out of range");
    }
  }

  MapKind kind() const { return kind_; }
  const std::vector<std::size_t>& x_arities() const { return x_arities_; }
  const std::vector<std::size_t>& z_arities() const { return z_arities_; }
  const std::vector<std::size_t>& reads(std::size_t z_coord) const { return reads_[z_coord]; }

  JointConfiguration operator()(const JointConfiguration& x) const {
    if (x.size() != x_arities_.size()) throw DimensionError("SemicoordinateMap: X configuration length mismatch");
    JointConfiguration z(std::vector<std::size_t>(z_arities_.size(), 0));
    forward_(x.values, z.values);
    return z;
  }

  void apply(std::span<const std::size_t> x, std::span<std::size_t> z) const { forward_(x, z); }

 private:
  MapKind kind_;
  std::vector<std::size_t> x_arities_;
  std::vector<std::size_t> z_arities_;
  Forward forward_;
  std::vector<std::vector<std::size_t>> reads_;
};

inline SemicoordinateMap identity_map(std::vector<std::size_t> arities) {
  std::vector<std::vector<std::size_t>> reads(arities.size());
  for (std::size_t i = 0; i < arities.size(); ++i) reads[i] = {i};
  auto copy = [](std::span<const std::size_t> x, std::span<std::size_t> z) { std::copy(x.begin(), x.end(), z.begin()); };
  return SemicoordinateMap(MapKind::Identity, arities, arities, copy, std::move(reads));
}

/// Bijection on the joint values of `subset` (row-major in subset order), identity elsewhere.
/// permutation[j] is the image of joint value j.
inline SemicoordinateMap permutation_map(std::vector<std::size_t> arities, std::vector<std::size_t> subset,
                                         std::vector<std::size_t> permutation) {
  std::set<std::size_t> unique(subset.begin(), subset.end());
  if (subset.empty() || unique.size() != subset.size()) throw DomainError("permutation_map: bad subset");
  std::vector<std::size_t> dims;
  for (auto k : subset) {
    if (k >= arities.size()) throw DimensionError("permutation_map: subset index out of range");
    dims.push_back(arities[k]);
  }
  std::size_t size = joint_size(dims);
  std::vector<std::size_t> sorted = permutation;
  std::sort(sorted.begin(), sorted.end());
  for (std::size_t j = 0; j < sorted.size(); ++j)
    if (sorted[j] != j || sorted.size() != size) throw DomainError("permutation_map: not a bijection of the joint values");

  std::vector<std::vector<std::size_t>> reads(arities.size());
  for (std::size_t i = 0; i < arities.size(); ++i) reads[i] = unique.count(i) ? subset : std::vector<std::size_t>{i};
  auto fwd = [subset, dims, permutation](std::span<const std::size_t> x, std::span<std::size_t> z) {
    std::copy(x.begin(), x.end(), z.begin());
    std::vector<std::size_t> local(subset.size());
    for (std::size_t k = 0; k < subset.size(); ++k) local[k] = x[subset[k]];
    decode(dims, permutation[encode(dims, local)], local);
    for (std::size_t k = 0; k < subset.size(); ++k) z[subset[k]] = local[k];
  };
  std::vector<std::size_t> z_arities = arities;
  return SemicoordinateMap(MapKind::JointPermutation, std::move(arities), std::move(z_arities), fwd, std::move(reads));
}

/// X = [x0, x^1, ..., x^M] with x0 in [0,M) and each x^m a copy of Z; z_i = x^{x0}_i.
inline SemicoordinateMap mixture_embedding_map(std::size_t components, std::vector<std::size_t> z_arities) {
  if (components == 0) throw DomainError("mixture_embedding_map: need at least one component");
  const std::size_t n = z_arities.size();
  std::vector<std::size_t> x_arities{components};
  for (std::size_t m = 0; m < components; ++m) x_arities.insert(x_arities.end(), z_arities.begin(), z_arities.end());
  std::vector<std::vector<std::size_t>> reads(n);
  for (std::size_t i = 0; i < n; ++i) {
    reads[i].push_back(0);
    for (std::size_t m = 0; m < components; ++m) reads[i].push_back(1 + m * n + i);
  }
  auto fwd = [n](std::span<const std::size_t> x, std::span<std::size_t> z) {
    for (std::size_t i = 0; i < n; ++i) z[i] = x[1 + x[0] * n + i];
  };
  return SemicoordinateMap(MapKind::MixtureEmbedding, std::move(x_arities), std::move(z_arities), fwd,
                           std::move(reads));
}

/// One X coordinate of a Bayes-net map: the value of `variable` given parent joint value `parent_value`.
struct BayesNetComponent {
  std::size_t variable;
  std::size_t parent_value;
};

struct BayesNetMap {
  SemicoordinateMap map;
  std::vector<BayesNetComponent> components;  // indexed by X coordinate
};

/// parents[i] lists the Z variables variable i is conditioned on; every parent index must exceed i.
inline BayesNetMap bayes_net_map(std::vector<std::size_t> z_arities, std::vector<std::vector<std::size_t>> parents) {
  const std::size_t n = z_arities.size();
  if (parents.size() != n) throw DimensionError("bayes_net_map: one parent list per variable");
  std::vector<std::size_t> offset(n);
  std::vector<std::vector<std::size_t>> parent_dims(n);
  std::vector<std::size_t> x_arities;
  std::vector<BayesNetComponent> comps;
  for (std::size_t i = 0; i < n; ++i) {
    std::set<std::size_t> seen;
    for (auto p : parents[i]) {
      if (p <= i || p >= n || !seen.insert(p).second) throw DomainError("bayes_net_map: invalid parent ordering");
      parent_dims[i].push_back(z_arities[p]);
    }
    offset[i] = x_arities.size();
    std::size_t count = joint_size(parent_dims[i]);
    for (std::size_t v = 0; v < count; ++v) {
      x_arities.push_back(z_arities[i]);
      comps.push_back({i, v});
    }
  }

  std::vector<std::vector<std::size_t>> reads(n);
  for (std::size_t i = n; i-- > 0;) {
    std::size_t count = joint_size(parent_dims[i]);
    for (std::size_t v = 0; v < count; ++v) reads[i].push_back(offset[i] + v);
    for (auto p : parents[i]) reads[i].insert(reads[i].end(), reads[p].begin(), reads[p].end());
    std::sort(reads[i].begin(), reads[i].end());
    reads[i].erase(std::unique(reads[i].begin(), reads[i].end()), reads[i].end());
  }

  auto fwd = [n, offset, parents, parent_dims](std::span<const std::size_t> x, std::span<std::size_t> z) {
    std::vector<std::size_t> local;
    for (std::size_t i = n; i-- > 0;) {
      local.resize(parents[i].size());
      for (std::size_t k = 0; k < parents[i].size(); ++k) local[k] = z[parents[i][k]];
      z[i] = x[offset[i] + encode(parent_dims[i], local)];
    }
  };
  return {SemicoordinateMap(MapKind::BayesNet, std::move(x_arities), std::move(z_arities), fwd, std::move(reads)),
          std::move(comps)};
}

/// P_Z(z) = sum_x q(x) [zeta(x) = z], by enumerating X.
inline DenseDistribution pushforward(const ProductDistribution& q, const SemicoordinateMap& zeta) {
  if (q.arities() != zeta.x_arities()) throw DimensionError("pushforward: distribution does not live on X");
  DenseDistribution out{zeta.z_arities(), std::vector<double>(joint_size(zeta.z_arities()), 0.0)};
  std::vector<std::size_t> z(zeta.z_arities().size());
  for_each_configuration(zeta.x_arities(), [&](const JointConfiguration& x) {
    zeta.apply(x.values, z);
    out.probs[encode(out.arities, z)] += q.prob(x);
  });
  return out;
}

namespace detail {

inline Factor pull_back_factor(const Factor& f, const SemicoordinateMap& zeta) {
  std::set<std::size_t> scope_set;
  for (auto z : f.scope()) scope_set.insert(zeta.reads(z).begin(), zeta.reads(z).end());
  std::vector<std::size_t> scope(scope_set.begin(), scope_set.end());
  std::vector<std::size_t> dims;
  for (auto k : scope) dims.push_back(zeta.x_arities()[k]);
  JointConfiguration x(std::vector<std::size_t>(zeta.x_arities().size(), 0));
  JointConfiguration z(std::vector<std::size_t>(zeta.z_arities().size(), 0));
  return Factor::tabulate(scope, dims, [&](std::span<const std::size_t> local) {
    for (std::size_t k = 0; k < scope.size(); ++k) x[scope[k]] = local[k];
    zeta.apply(x.values, z.values);
    return f.value(z);
  });
}

inline bool needs_retabulation(const Factor& f, const SemicoordinateMap& zeta) {
  if (zeta.kind() == MapKind::Identity) return false;
  for (auto z : f.scope())
    if (zeta.reads(z).size() != 1 || zeta.reads(z)[0] != z) return true;
  return zeta.x_arities().size() != zeta.z_arities().size();
}

}  // namespace detail

/// G_X(x) = G(zeta(x)); factors whose Z coordinates are read through unchanged are copied as is.
inline FactoredObjective pull_back_objective(const FactoredObjective& obj, const SemicoordinateMap& zeta) {
  if (obj.arities() != zeta.z_arities()) throw DimensionError("pull_back_objective: objective does not live on Z");
  FactoredObjective out(zeta.x_arities());
  for (const auto& f : obj.factors())
    out.add_factor(detail::needs_retabulation(f, zeta) ? detail::pull_back_factor(f, zeta) : f);
  for (const auto& c : obj.constraints())
    out.add_constraint(detail::needs_retabulation(c, zeta) ? detail::pull_back_factor(c, zeta) : c);
  out.set_multipliers(obj.multipliers());
  return out;
}

enum class EscapeCriterion { MinLagrangian, MaxGradientNorm };

enum class CandidateSet { Transpositions, Exhaustive };

inline constexpr std::size_t kMaxEscapeCandidates = 10000;
inline constexpr std::size_t kMaxExhaustiveJointValues = 8;

struct EscapeResult {
  std::vector<std::size_t> permutation;
  double lagrangian = 0.0;
  double gradient_norm = 0.0;
  std::size_t candidates_scored = 0;
};

/// Identity followed by every transposition of the joint values, truncated to `cap`.
inline std::vector<std::vector<std::size_t>> transposition_candidates(std::size_t joint_values,
                                                                      std::size_t cap = kMaxEscapeCandidates) {
  std::vector<std::size_t> id(joint_values);
  std::iota(id.begin(), id.end(), std::size_t{0});
  std::vector<std::vector<std::size_t>> out{id};
  for (std::size_t a = 0; a < joint_values && out.size() < cap; ++a)
    for (std::size_t b = a + 1; b < joint_values && out.size() < cap; ++b) {
      auto p = id;
      std::swap(p[a], p[b]);
      out.push_back(std::move(p));
    }
  return out;
}

inline std::vector<std::vector<std::size_t>> all_permutations(std::size_t joint_values) {
  if (joint_values > kMaxExhaustiveJointValues)
    throw CapacityError("all_permutations: more than " + std::to_string(kMaxExhaustiveJointValues) + " joint values");
  std::vector<std::size_t> p(joint_values);
  std::iota(p.begin(), p.end(), std::size_t{0});
  std::vector<std::vector<std::size_t>> out;
  do out.push_back(p);
  while (std::next_permutation(p.begin(), p.end()));
  return out;
}

/// Scores permutations of the subset's joint values with q held fixed and returns the best one.
inline EscapeResult permutation_escape_search(const FactoredObjective& obj, const ProductDistribution& q,
                                              const std::vector<std::size_t>& subset, EscapeCriterion criterion,
                                              double temperature, CandidateSet set = CandidateSet::Transpositions,
                                              std::optional<std::vector<std::vector<std::size_t>>> candidates = {}) {
  check_distribution(obj, q);
  std::vector<std::size_t> dims;
  for (auto k : subset) {
    if (k >= obj.agents()) throw DimensionError("permutation_escape_search: subset index out of range");
    dims.push_back(obj.arities()[k]);
  }
  std::size_t values = joint_size(dims, kMaxFactorTable);
  if (!candidates) candidates = set == CandidateSet::Exhaustive ? all_permutations(values) : transposition_candidates(values);
  if (candidates->empty()) throw DomainError("permutation_escape_search: no candidates");

  std::optional<EscapeResult> best;
  for (const auto& perm : *candidates) {
    auto pulled = pull_back_objective(obj, permutation_map(obj.arities(), subset, perm));
    EscapeResult r{perm, lagrangian(pulled, q, temperature), norm2(gradient(pulled, q, temperature)), 0};
    bool take = !best || (criterion == EscapeCriterion::MinLagrangian ? r.lagrangian < best->lagrangian
                                                                      : r.gradient_norm > best->gradient_norm);
    if (take) best = std::move(r);
  }
  best->candidates_scored = candidates->size();
  return *best;
}

}  // namespace pc
