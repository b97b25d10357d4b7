#include <gtest/gtest.h>

#include <cmath>

#include "pc/objective.hpp"
#include "pc/oracle.hpp"
#include "pc/semicoord.hpp"
#include "pc/updaters.hpp"
#include "support.hpp"

namespace {

using namespace pc;
using pc::testing::random_arities;
using pc::testing::random_objective;
using pc::testing::random_product;

FactoredObjective coordination_game() {
  FactoredObjective obj({2, 2});
  obj.add_factor(Factor({0, 1}, {2, 2}, {0.0, 18.0, 25.0, 2.0}));
  return obj;
}

DenseDistribution dense(const ProductDistribution& q) { return pushforward(q, identity_map(q.arities())); }

ProductDistribution brouwer_fixed_point(const FactoredObjective& obj, ProductDistribution q, double temperature) {
  std::vector<std::size_t> one(1);
  for (int sweep = 0; sweep < 5000; ++sweep)
    for (std::size_t i = 0; i < q.agents(); ++i) {
      one[0] = i;
      q = brouwer_step(obj, q, one, temperature);
    }
  return q;
}

TEST(ExactBoltzmann, FlatObjectiveIsUniform) {
  auto p = exact_boltzmann(FactoredObjective({2, 3}), 0.5);
  for (double v : p.probs) EXPECT_NEAR(v, 1.0 / 6.0, 1e-15);
}

TEST(ExactBoltzmann, ColdLimitSitsOnTheArgmin) {
  auto obj = coordination_game();
  auto p = exact_boltzmann(obj, 1e-6);
  EXPECT_NEAR(p({0, 0}), 1.0, 1e-6);
  EXPECT_THROW(exact_boltzmann(obj, 0.0), DomainError);
}

TEST(ExactBoltzmann, CoordinationGameTable) {
  auto p = exact_boltzmann(coordination_game(), 7.0);
  double g[4] = {0.0, 18.0, 25.0, 2.0};
  double z = 0.0;
  for (double v : g) z += std::exp(-v / 7.0);
  for (std::size_t k = 0; k < 4; ++k) EXPECT_NEAR(p.probs[k], std::exp(-g[k] / 7.0) / z, 1e-15);
  EXPECT_NEAR(log_partition(coordination_game(), 7.0), std::log(z), 1e-14);
}

TEST(ExactBoltzmann, NormalizedOnRandomInstances) {
  Rng rng(1);
  for (int rep = 0; rep < 50; ++rep) {
    auto ar = random_arities(6, rng);
    auto p = exact_boltzmann(random_objective(ar, 6, rng, 2), 0.3);
    EXPECT_NEAR(p.total(), 1.0, 1e-12);
  }
}

TEST(LogPartition, SurvivesLargeEnergies) {
  FactoredObjective obj({2});
  obj.add_factor(Factor({0}, {2}, {1e4, 1e4 + 1.0}));
  EXPECT_NEAR(log_partition(obj, 1.0), -1e4 + std::log(1.0 + std::exp(-1.0)), 1e-9);
}

TEST(BoltzmannMarginals, FlatObjectiveIsUniform) {
  auto q = boltzmann_marginals(FactoredObjective({3, 2}), 1.0);
  for (std::size_t i = 0; i < 2; ++i)
    for (double v : q.row(i)) EXPECT_NEAR(v, 1.0 / static_cast<double>(q.arity(i)), 1e-15);
}

TEST(BoltzmannMarginals, SeparableObjectiveMatchesTheFixedPoint) {
  FactoredObjective obj({2, 3});
  obj.add_factor(Factor({0}, {2}, {0.0, 1.0}));
  obj.add_factor(Factor({1}, {3}, {2.0, -1.0, 0.5}));
  auto marg = boltzmann_marginals(obj, 0.8);
  auto fp = brouwer_fixed_point(obj, ProductDistribution::uniform({2, 3}), 0.8);
  for (std::size_t i = 0; i < 2; ++i)
    for (std::size_t m = 0; m < marg.arity(i); ++m) EXPECT_NEAR(marg(i, m), fp(i, m), 1e-12);
}

TEST(BoltzmannMarginals, CoupledGameDiffersFromTheFixedPoint) {
  auto obj = coordination_game();
  auto marg = boltzmann_marginals(obj, 7.0);
  auto fp = brouwer_fixed_point(obj, ProductDistribution::uniform({2, 2}), 7.0);
  RecordProperty("marginals", std::to_string(marg(0, 0)) + " " + std::to_string(marg(1, 0)));
  RecordProperty("fixed_point", std::to_string(fp(0, 0)) + " " + std::to_string(fp(1, 0)));
  EXPECT_GT(std::abs(marg(0, 0) - fp(0, 0)) + std::abs(marg(1, 0) - fp(1, 0)), 1e-3);
  // the product of marginals cannot beat the product minimizer on the Lagrangian
  EXPECT_GE(lagrangian(obj, marg, 7.0), lagrangian(obj, fp, 7.0) - 1e-12);
}

TEST(KlQp, ZeroOnEqualProducts) {
  Rng rng(2);
  auto q = random_product({2, 3, 2}, rng);
  EXPECT_NEAR(kl_qp(q, dense(q)), 0.0, 1e-14);
}

TEST(KlQp, NonnegativeAndAsymmetric) {
  Rng rng(3);
  for (int rep = 0; rep < 100; ++rep) {
    auto ar = random_arities(4, rng);
    auto q = random_product(ar, rng);
    auto p = exact_boltzmann(random_objective(ar, 5, rng), 0.7);
    EXPECT_GE(kl_qp(q, p), -1e-14);
  }
  auto q = ProductDistribution::from_rows({{0.9, 0.1}});
  auto p = ProductDistribution::from_rows({{0.5, 0.5}});
  EXPECT_GT(std::abs(kl_qp(q, dense(p)) - kl_qp(p, dense(q))), 1e-3);
}

TEST(KlQp, ErrorsOnSupportAndSpaceMismatch) {
  auto q = ProductDistribution::from_rows({{0.5, 0.5}});
  EXPECT_THROW(kl_qp(q, DenseDistribution{{2}, {1.0, 0.0}}), DomainError);
  EXPECT_THROW(kl_qp(q, DenseDistribution{{3}, {0.2, 0.3, 0.5}}), DimensionError);
}

TEST(KlQp, LagrangianIdentity) {
  Rng rng(4);
  for (int rep = 0; rep < 100; ++rep) {
    auto ar = random_arities(5, rng);
    auto obj = random_objective(ar, 6, rng, 2);
    auto q = random_product(ar, rng);
    double t = 0.2 + 0.05 * rep;
    double rhs = t * kl_qp(q, exact_boltzmann(obj, t)) - t * log_partition(obj, t);
    EXPECT_NEAR(lagrangian(obj, q, t), rhs, 1e-10);
  }
}

TEST(Enumerated, ExpectationAndConditionals) {
  auto obj = coordination_game();
  auto q = ProductDistribution::from_rows({{0.3, 0.7}, {0.5, 0.5}});
  EXPECT_NEAR(enumerated_expectation(obj, q), 0.3 * 9.0 + 0.7 * 13.5, 1e-12);
  auto c = enumerated_conditional(obj, q, 0);
  EXPECT_NEAR(c[0], 9.0, 1e-12);
  EXPECT_NEAR(c[1], 13.5, 1e-12);
}

TEST(ExhaustiveMinimum, FirstArgminInRowMajorOrder) {
  FactoredObjective obj({2, 2});
  obj.add_factor(Factor({0, 1}, {2, 2}, {3.0, 1.0, 1.0, 2.0}));
  auto m = exhaustive_minimum(obj);
  EXPECT_EQ(m.argmin, (JointConfiguration{0, 1}));
  EXPECT_EQ(m.value, 1.0);
}

TEST(EnumerateBlocks, ConstantObjectiveHasNoVariance) {
  FactoredObjective obj({3, 2, 2});
  obj.add_factor(Factor({}, {}, {1.5}));
  Rng rng(5);
  auto q = random_product({3, 2, 2}, rng);
  std::vector<std::size_t> counts{1, 2, 4};
  auto b = enumerate_blocks_expectation(q, 0, counts, raw_utility(obj), EstimatorRule::Gradient);
  for (double v : b.cell_variance) EXPECT_NEAR(v, 0.0, 1e-12);
  for (double v : b.cell_mean) EXPECT_NEAR(v, 1.5, 1e-12);
  for (double v : b.update_mean) EXPECT_NEAR(v, 0.0, 1e-12);
}

TEST(EnumerateBlocks, CellMeansAreConditionalExpectations) {
  Rng rng(6);
  for (int rep = 0; rep < 20; ++rep) {
    auto ar = random_arities(3, rng);
    auto obj = random_objective(ar, 4, rng, 1);
    auto q = random_product(ar, rng);
    std::vector<std::size_t> counts(ar[1], 2);
    auto b = enumerate_blocks_expectation(q, 1, counts, raw_utility(obj), EstimatorRule::Gradient);
    auto c = conditional_expectation(obj, q, 1);
    auto v = conditional_variance(q, 1, raw_utility(obj));
    for (std::size_t m = 0; m < ar[1]; ++m) {
      EXPECT_NEAR(b.cell_mean[m], c[m], 1e-12);
      EXPECT_NEAR(b.cell_variance[m], v[m] / 2.0, 1e-12);
    }
  }
}

TEST(EnumerateBlocks, AristocratNeverLosesToRaw) {
  Rng rng(7);
  std::uniform_int_distribution<std::size_t> count(1, 4);
  for (int rep = 0; rep < 100; ++rep) {
    auto ar = random_arities(3, rng);
    auto obj = random_objective(ar, 4, rng);
    auto q = random_product(ar, rng);
    std::vector<std::size_t> counts(ar[2]);
    Row w;
    for (auto& c : counts) {
      c = count(rng);
      w.push_back(1.0 / static_cast<double>(c));
    }
    auto raw = enumerate_blocks_expectation(q, 2, counts, raw_utility(obj), EstimatorRule::Gradient);
    auto au = enumerate_blocks_expectation(q, 2, counts, aristocrat_utility(obj, 2, w), EstimatorRule::Gradient);
    EXPECT_LE(au.update_variance, raw.update_variance + 1e-12);
  }
}

TEST(EnumerateBlocks, Errors) {
  FactoredObjective obj({2, 2});
  auto q = ProductDistribution::uniform({2, 2});
  EXPECT_THROW(enumerate_blocks_expectation(q, 0, std::vector<std::size_t>{1}, raw_utility(obj),
                                            EstimatorRule::Gradient),
               DimensionError);
  EXPECT_THROW(enumerate_blocks_expectation(q, 0, std::vector<std::size_t>{1, 0}, raw_utility(obj),
                                            EstimatorRule::Gradient),
               EmptyCellError);
  FactoredObjective big(std::vector<std::size_t>(12, 2));
  auto qb = ProductDistribution::uniform(std::vector<std::size_t>(12, 2));
  EXPECT_THROW(enumerate_blocks_expectation(qb, 0, std::vector<std::size_t>{4, 4}, raw_utility(big),
                                            EstimatorRule::Gradient),
               CapacityError);
}

}  // namespace
