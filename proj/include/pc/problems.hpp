#pragma once

// k-sat instances (DIMACS CNF) and NK landscapes, with their factored objectives.

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "pc/core.hpp"
#include "pc/error.hpp"
#include "pc/joint_space.hpp"
#include "pc/objective.hpp"

namespace pc {

/// A literal over a 1-based variable; satisfied when the variable's value is 1 (positive) or 0 (negated).
struct Literal {
  std::size_t variable;
  bool positive;

  std::size_t satisfying_value() const { return positive ? 1 : 0; }
  bool operator==(const Literal&) const = default;
};

struct Clause {
  std::vector<Literal> literals;

  bool operator==(const Clause&) const = default;
};

struct CnfInstance {
  std::size_t variables = 0;
  std::vector<Clause> clauses;

  bool operator==(const CnfInstance&) const = default;
};

namespace detail {

inline void check_clause(const Clause& c, std::size_t variables) {
  if (c.literals.empty()) throw ParseError("empty clause");
  std::set<std::size_t> seen;
  for (const auto& l : c.literals) {
    if (l.variable < 1 || l.variable > variables) throw ParseError("literal out of range: " + std::to_string(l.variable));
    if (!seen.insert(l.variable).second)
      throw ParseError("variable " + std::to_string(l.variable) + " repeated within a clause");
  }
}

}  // namespace detail

/// Reads DIMACS CNF: 'c' comment lines, one "p cnf N C" header, zero-terminated clauses, optional '%' end marker.
inline CnfInstance parse_dimacs(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string line;
  CnfInstance inst;
  bool header = false;
  std::size_t declared = 0;
  Clause current;
  while (std::getline(in, line)) {
    std::size_t start = line.find_first_not_of(" \t\r");
    if (start == std::string::npos) continue;
    char lead = line[start];
    if (lead == 'c') continue;
    if (lead == '%') break;
    std::istringstream ls(line);
    if (lead == 'p') {
      std::string p, fmt;
      long long n = -1, c = -1;
      if (header) throw ParseError("duplicate header");
      if (!(ls >> p >> fmt >> n >> c) || fmt != "cnf" || n < 0 || c < 0) throw ParseError("malformed header: " + line);
      std::string extra;
      if (ls >> extra) throw ParseError("malformed header: " + line);
      inst.variables = static_cast<std::size_t>(n);
      declared = static_cast<std::size_t>(c);
      header = true;
      continue;
    }
    if (!header) throw ParseError("clause before header");
    std::string tok;
    while (ls >> tok) {
      long long lit = 0;
      std::size_t used = 0;
      try {
        lit = std::stoll(tok, &used);
      } catch (const std::exception&) {
        throw ParseError("bad literal: " + tok);
      }
      if (used != tok.size()) throw ParseError("bad literal: " + tok);
      if (lit == 0) {
        detail::check_clause(current, inst.variables);
        inst.clauses.push_back(std::move(current));
        current = {};
        continue;
      }
      current.literals.push_back({static_cast<std::size_t>(lit < 0 ? -lit : lit), lit > 0});
    }
  }
  if (!header) throw ParseError("missing header");
  if (!current.literals.empty()) throw ParseError("unterminated clause");
  if (inst.clauses.size() != declared)
    throw ParseError("header declares " + std::to_string(declared) + " clauses, found " +
                     std::to_string(inst.clauses.size()));
  return inst;
}

/// Canonical DIMACS text: header line, then one clause per line.
inline std::string write_dimacs(const CnfInstance& inst) {
  std::string out = "p cnf " + std::to_string(inst.variables) + " " + std::to_string(inst.clauses.size()) + "\n";
  for (const auto& c : inst.clauses) {
    for (const auto& l : c.literals) out += (l.positive ? "" : "-") + std::to_string(l.variable) + " ";
    out += "0\n";
  }
  return out;
}

inline bool clause_satisfied(const Clause& c, const JointConfiguration& z) {
  return std::any_of(c.literals.begin(), c.literals.end(),
                     [&](const Literal& l) { return z[l.variable - 1] == l.satisfying_value(); });
}

/// Number of clauses falsified by z (z[v-1] is variable v).
inline std::size_t count_violations(const CnfInstance& inst, const JointConfiguration& z) {
  if (z.size() != inst.variables) throw DimensionError("count_violations: assignment length mismatch");
  std::size_t n = 0;
  for (const auto& c : inst.clauses) n += !clause_satisfied(c, z);
  return n;
}

/// G = 0 and one 0/1 constraint factor per clause that is 1 iff every literal is false.
inline FactoredObjective ksat_objective(const CnfInstance& inst) {
  if (inst.variables == 0) throw DimensionError("ksat_objective: no variables");
  FactoredObjective obj(std::vector<std::size_t>(inst.variables, 2));
  for (const auto& c : inst.clauses) {
    detail::check_clause(c, inst.variables);
    std::vector<std::size_t> scope;
    for (const auto& l : c.literals) scope.push_back(l.variable - 1);
    obj.add_constraint(Factor::tabulate(scope, std::vector<std::size_t>(scope.size(), 2),
                                        [&](std::span<const std::size_t> local) {
                                          for (std::size_t k = 0; k < local.size(); ++k)
                                            if (local[k] == c.literals[k].satisfying_value()) return 0.0;
                                          return 1.0;
                                        }));
  }
  return obj;
}

/// Probability that q falsifies every literal of the clause.
inline double expected_violation(const Clause& c, const ProductDistribution& q) {
  double p = 1.0;
  for (const auto& l : c.literals) p *= q(l.variable - 1, 1 - l.satisfying_value());
  return p;
}

/// The hidden assignment drawn first by generate_planted_ksat for the same (N, seed).
inline JointConfiguration planted_assignment(std::size_t variables, std::uint64_t seed) {
  Rng rng(seed);
  std::bernoulli_distribution coin(0.5);
  JointConfiguration z(std::vector<std::size_t>(variables, 0));
  for (auto& v : z.values) v = coin(rng) ? 1 : 0;
  return z;
}

/// Random k-clauses over N variables, each kept only if the planted assignment satisfies it.
inline CnfInstance generate_planted_ksat(std::size_t variables, std::size_t clauses, std::size_t k,
                                         std::uint64_t seed) {
  if (k == 0 || k > variables) throw DomainError("generate_planted_ksat: need 1 <= k <= N");
  Rng rng(seed);
  std::bernoulli_distribution coin(0.5);
  JointConfiguration hidden(std::vector<std::size_t>(variables, 0));
  for (auto& v : hidden.values) v = coin(rng) ? 1 : 0;

  CnfInstance inst{variables, {}};
  std::vector<std::size_t> pool(variables);
  std::iota(pool.begin(), pool.end(), std::size_t{1});
  while (inst.clauses.size() < clauses) {
    Clause c;
    for (std::size_t j = 0; j < k; ++j) {
      std::uniform_int_distribution<std::size_t> pick(j, variables - 1);
      std::swap(pool[j], pool[pick(rng)]);
      c.literals.push_back({pool[j], coin(rng)});
    }
    if (clause_satisfied(c, hidden)) inst.clauses.push_back(std::move(c));
  }
  return inst;
}

struct NkInstance {
  std::size_t sites = 0;
  std::size_t neighbors_per_site = 0;
  std::uint64_t seed = 0;
  std::vector<std::vector<std::size_t>> neighbors;  // per site, K distinct indices != site
  std::vector<std::vector<double>> tables;          // per site, 2^(K+1) values indexed by (z_i, z_nb...) row-major

  bool operator==(const NkInstance&) const = default;
};

inline NkInstance generate_nk(std::size_t sites, std::size_t k, std::uint64_t seed) {
  if (sites == 0 || k >= sites) throw DomainError("generate_nk: need 0 <= K <= N-1");
  if (k + 1 >= 21) throw CapacityError("generate_nk: local table too large");
  Rng rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  NkInstance inst{sites, k, seed, {}, {}};
  std::vector<std::size_t> pool;
  for (std::size_t i = 0; i < sites; ++i) {
    pool.clear();
    for (std::size_t j = 0; j < sites; ++j)
      if (j != i) pool.push_back(j);
    for (std::size_t j = 0; j < k; ++j) {
      std::uniform_int_distribution<std::size_t> pick(j, pool.size() - 1);
      std::swap(pool[j], pool[pick(rng)]);
    }
    inst.neighbors.emplace_back(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(k));
    std::vector<double> table(std::size_t{1} << (k + 1));
    for (double& v : table) v = unit(rng);
    inst.tables.push_back(std::move(table));
  }
  return inst;
}

inline void check_nk(const NkInstance& inst) {
  if (inst.sites == 0 || inst.neighbors_per_site >= inst.sites) throw DomainError("NK: need 0 <= K <= N-1");
  if (inst.neighbors.size() != inst.sites || inst.tables.size() != inst.sites)
    throw DimensionError("NK: one neighbor list and table per site");
  for (std::size_t i = 0; i < inst.sites; ++i) {
    std::set<std::size_t> nb(inst.neighbors[i].begin(), inst.neighbors[i].end());
    if (nb.size() != inst.neighbors_per_site || inst.neighbors[i].size() != inst.neighbors_per_site || nb.count(i) ||
        (!nb.empty() && *nb.rbegin() >= inst.sites))
      throw DomainError("NK: bad neighbor list at site " + std::to_string(i));
    if (inst.tables[i].size() != (std::size_t{1} << (inst.neighbors_per_site + 1)))
      throw DimensionError("NK: bad table size at site " + std::to_string(i));
    for (double v : inst.tables[i])
      if (!(v >= 0.0 && v < 1.0)) throw DomainError("NK: table value outside [0,1)");
  }
}

/// One factor per site over (i, neighbors) holding E_i / N.
inline FactoredObjective nk_objective(const NkInstance& inst) {
  check_nk(inst);
  FactoredObjective obj(std::vector<std::size_t>(inst.sites, 2));
  const double scale = 1.0 / static_cast<double>(inst.sites);
  for (std::size_t i = 0; i < inst.sites; ++i) {
    std::vector<std::size_t> scope{i};
    scope.insert(scope.end(), inst.neighbors[i].begin(), inst.neighbors[i].end());
    std::vector<double> table(inst.tables[i]);
    for (double& v : table) v *= scale;
    obj.add_factor(Factor(std::move(scope), std::vector<std::size_t>(inst.neighbors_per_site + 1, 2), std::move(table)));
  }
  return obj;
}

/// G(z) = N^-1 sum_i E_i(z_i, z_nb), evaluated directly from the tables.
inline double nk_value(const NkInstance& inst, const JointConfiguration& z) {
  double g = 0.0;
  for (std::size_t i = 0; i < inst.sites; ++i) {
    std::size_t idx = z[i];
    for (auto j : inst.neighbors[i]) idx = idx * 2 + z[j];
    g += inst.tables[i][idx];
  }
  return g / static_cast<double>(inst.sites);
}

/// "nk N K seed", then per site a "neighbors ..." line and a "table ..." line (%.17g).
inline std::string write_nk(const NkInstance& inst) {
  std::string out = "nk " + std::to_string(inst.sites) + " " + std::to_string(inst.neighbors_per_site) + " " +
                    std::to_string(inst.seed) + "\n";
  char buf[40];
  for (std::size_t i = 0; i < inst.sites; ++i) {
    out += "neighbors";
    for (auto j : inst.neighbors[i]) out += " " + std::to_string(j);
    out += "\ntable";
    for (double v : inst.tables[i]) {
      std::snprintf(buf, sizeof buf, " %.17g", v);
      out += buf;
    }
    out += "\n";
  }
  return out;
}

inline NkInstance parse_nk(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string line, word;
  NkInstance inst;
  if (!std::getline(in, line)) throw ParseError("NK: empty input");
  {
    std::istringstream ls(line);
    if (!(ls >> word >> inst.sites >> inst.neighbors_per_site >> inst.seed) || word != "nk")
      throw ParseError("NK: malformed header: " + line);
  }
  for (std::size_t i = 0; i < inst.sites; ++i) {
    if (!std::getline(in, line)) throw ParseError("NK: missing neighbor line for site " + std::to_string(i));
    std::istringstream nl(line);
    if (!(nl >> word) || word != "neighbors") throw ParseError("NK: expected neighbors line");
    std::vector<std::size_t> nb;
    std::size_t j;
    while (nl >> j) nb.push_back(j);
    if (!nl.eof()) throw ParseError("NK: bad neighbor index at site " + std::to_string(i));
    if (!std::getline(in, line)) throw ParseError("NK: missing table line for site " + std::to_string(i));
    std::istringstream tl(line);
    if (!(tl >> word) || word != "table") throw ParseError("NK: expected table line");
    std::vector<double> table;
    double v;
    while (tl >> v) table.push_back(v);
    if (!tl.eof()) throw ParseError("NK: bad table value at site " + std::to_string(i));
    inst.neighbors.push_back(std::move(nb));
    inst.tables.push_back(std::move(table));
  }
  while (std::getline(in, line))
    if (line.find_first_not_of(" \t\r") != std::string::npos) throw ParseError("NK: trailing content");
  try {
    check_nk(inst);
  } catch (const DomainError& e) {
    throw ParseError(e.what());
  } catch (const DimensionError& e) {
    throw ParseError(e.what());
  }
  return inst;
}

}  // namespace pc
