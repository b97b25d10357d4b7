#include <gtest/gtest.h>

#include <cmath>
#include <map>

#include "pc/aging.hpp"
#include "pc/core.hpp"
#include "pc/error.hpp"
#include "pc/joint_space.hpp"
#include "support.hpp"

namespace {

using namespace pc;
using pc::testing::random_arities;
using pc::testing::random_product;
using pc::testing::random_row;

double row_sum(std::span<const double> r) {
  double s = 0.0;
  for (double v : r) s += v;
  return s;
}

TEST(Entropy, UniformBinaryRow) {
  EXPECT_NEAR(entropy(ProductDistribution::uniform({2})), std::log(2.0), 1e-15);
}

TEST(Entropy, DeterministicRowsHaveZeroEntropy) {
  auto q = ProductDistribution::from_rows({{1.0, 0.0}, {1.0, 0.0}});
  EXPECT_EQ(entropy(q), 0.0);
}

TEST(Entropy, MatchesJointEnumeration) {
  auto q = ProductDistribution::from_rows({{0.25, 0.75}, {0.5, 0.5}});
  double brute = 0.0;
  for_each_configuration(q.arities(), [&](const JointConfiguration& x) {
    double p = q.prob(x);
    brute -= p * std::log(p);
  });
  EXPECT_NEAR(entropy(q), brute, 1e-14);
}

TEST(Entropy, BoundedByLogArity) {
  Rng rng(1);
  for (int rep = 0; rep < 200; ++rep) {
    auto ar = random_arities(4, rng, 4);
    auto q = random_product(ar, rng);
    double cap = 0.0;
    for (auto a : ar) cap += std::log(static_cast<double>(a));
    EXPECT_GE(entropy(q), 0.0);
    EXPECT_LE(entropy(q), cap + 1e-12);
  }
}

TEST(Entropy, ConcaveUnderRowMixing) {
  Rng rng(2);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int rep = 0; rep < 500; ++rep) {
    Row a = random_row(3, rng), b = random_row(3, rng), mix(3);
    double t = u(rng);
    for (std::size_t k = 0; k < 3; ++k) mix[k] = t * a[k] + (1 - t) * b[k];
    EXPECT_GE(row_entropy(mix), t * row_entropy(a) + (1 - t) * row_entropy(b) - 1e-14);
  }
}

TEST(Sample, DegenerateRowsAreDeterministic) {
  auto q = ProductDistribution::from_rows({{1.0, 0.0}, {0.0, 1.0}});
  Rng rng(3);
  for (int k = 0; k < 1000; ++k) EXPECT_EQ(sample(q, rng), (JointConfiguration{0, 1}));
}

TEST(Sample, UniformFrequencies) {
  auto q = ProductDistribution::uniform({2, 2});
  Rng rng(4);
  std::map<std::size_t, int> hits;
  const int draws = 100000;
  for (int k = 0; k < draws; ++k) {
    auto x = sample(q, rng);
    ++hits[x[0] * 2 + x[1]];
  }
  for (std::size_t c = 0; c < 4; ++c) EXPECT_NEAR(hits[c] / static_cast<double>(draws), 0.25, 0.01);
}

TEST(Sample, SameSeedSameStream) {
  Rng rng0(5);
  auto q = random_product({2, 3, 4, 2}, rng0);
  Rng a(99), b(99);
  for (int k = 0; k < 200; ++k) EXPECT_EQ(sample(q, a), sample(q, b));
}

TEST(Mode, ComponentwiseArgmax) {
  auto q = ProductDistribution::from_rows({{0.9, 0.1}, {0.2, 0.8}});
  EXPECT_EQ(mode(q), (JointConfiguration{0, 1}));
}

TEST(Mode, TiesGoToTheLowestMove) {
  EXPECT_EQ(mode(ProductDistribution::uniform({2, 3, 4})), (JointConfiguration{0, 0, 0}));
}

TEST(Mode, MatchesExhaustiveArgmax) {
  Rng rng(6);
  for (int rep = 0; rep < 100; ++rep) {
    auto ar = random_arities(1 + rep % 10, rng, 3);
    if (joint_size(ar) > 4096) continue;
    auto q = random_product(ar, rng);
    JointConfiguration best;
    double best_p = -1.0;
    for_each_configuration(ar, [&](const JointConfiguration& x) {
      if (q.prob(x) > best_p) {
        best_p = q.prob(x);
        best = x;
      }
    });
    EXPECT_EQ(mode(q), best);
  }
}

TEST(SimplexRepair, ValidRowIsUnchanged) {
  Row r = simplex_repair(Row{0.3, 0.7});
  EXPECT_NEAR(r[0], 0.3, 1e-15);
  EXPECT_NEAR(r[1], 0.7, 1e-15);
}

TEST(SimplexRepair, OverflowIsClampedThenFloored) {
  Row r = simplex_repair(Row{1.2, -0.2});
  EXPECT_NEAR(r[0], 1.0 - kDefaultFloor, 1e-15);
  EXPECT_EQ(r[1], kDefaultFloor);
  EXPECT_NEAR(row_sum(r), 1.0, 1e-12);
}

TEST(SimplexRepair, ProjectionBeatsGridSearch) {
  Row v{0.5, 0.4, 0.3};
  Row p = simplex_projection(v);
  auto dist = [&](double a, double b, double c) {
    return (a - v[0]) * (a - v[0]) + (b - v[1]) * (b - v[1]) + (c - v[2]) * (c - v[2]);
  };
  double best = 1e9;
  const int grid = 400;
  for (int a = 0; a <= grid; ++a)
    for (int b = 0; a + b <= grid; ++b) best = std::min(best, dist(a / double(grid), b / double(grid), (grid - a - b) / double(grid)));
  EXPECT_LE(dist(p[0], p[1], p[2]), best + 1e-12);
  EXPECT_NEAR(p[0], 0.5 - 0.2 / 3, 1e-12);
}

TEST(SimplexRepair, RandomInputsGiveValidRows) {
  Rng rng(7);
  std::normal_distribution<double> g(0.0, 2.0);
  for (int rep = 0; rep < 1000; ++rep) {
    Row v(2 + rep % 5);
    for (double& x : v) x = g(rng);
    Row r = simplex_repair(v);
    EXPECT_NEAR(row_sum(r), 1.0, 1e-12);
    for (double x : r) EXPECT_GE(x, kDefaultFloor);
  }
}

TEST(SimplexRepair, RejectsNonFinite) {
  EXPECT_THROW(simplex_repair(Row{0.5, std::nan("")}), DomainError);
}

TEST(BoltzmannRow, ConstantEnergiesGiveUniform) {
  Row r = boltzmann_row(Row{3.0, 3.0, 3.0}, 0.1);
  for (double v : r) EXPECT_NEAR(v, 1.0 / 3.0, 1e-15);
}

TEST(BoltzmannRow, SurvivesHugeEnergyGaps) {
  Row r = boltzmann_row(Row{0.0, 1e6}, 1e-3);
  EXPECT_NEAR(r[0], 1.0 - kDefaultFloor, 1e-15);
  EXPECT_EQ(r[1], kDefaultFloor);
}

TEST(ApplyFloor, ArityOneRowIsConstant) {
  Row r{0.3};
  apply_floor(r);
  EXPECT_EQ(r[0], 1.0);
}

TEST(ProductDistribution, RejectsInvalidRows) {
  EXPECT_THROW(ProductDistribution::from_rows({{0.5, 0.6}}), DomainError);
  EXPECT_THROW(ProductDistribution::from_rows({{1.5, -0.5}}), DomainError);
  EXPECT_THROW(ProductDistribution::from_rows({}), DimensionError);
  EXPECT_THROW(ProductDistribution::uniform({2, 0}), DimensionError);
  auto q = ProductDistribution::uniform({2, 3});
  EXPECT_THROW(q.set_row(0, Row{1.0 / 3, 1.0 / 3, 1.0 / 3}), DimensionError);
  EXPECT_THROW(q.prob(JointConfiguration{0}), DimensionError);
}

TEST(SolverConfig, Validation) {
  SolverConfig cfg;
  EXPECT_NO_THROW(cfg.validate());
  EXPECT_DOUBLE_EQ(cfg.step_lambda, 0.5);
  EXPECT_DOUBLE_EQ(cfg.beta(), 1.0);
  auto bad = cfg;
  bad.temperature = 0.0;
  EXPECT_THROW(bad.validate(), DomainError);
  bad = cfg;
  bad.max_inner = 0;
  EXPECT_THROW(bad.validate(), DomainError);
  bad = cfg;
  bad.cooling = 1.0;
  EXPECT_THROW(bad.validate(), DomainError);
}

TEST(JointSpace, EncodeDecodeRoundTrip) {
  std::vector<std::size_t> ar{2, 3, 4};
  std::size_t idx = 0;
  for_each_configuration(ar, [&](const JointConfiguration& x) {
    EXPECT_EQ(encode(ar, x.values), idx);
    EXPECT_EQ(decode(ar, idx), x);
    ++idx;
  });
  EXPECT_EQ(idx, 24u);
}

TEST(JointSpace, CapIsEnforced) {
  std::vector<std::size_t> ar(21, 2);
  EXPECT_THROW(joint_size(ar), CapacityError);
}

TEST(JointSpace, HammingDistance) {
  EXPECT_EQ(hamming_distance(JointConfiguration{0, 1, 2}, JointConfiguration{0, 2, 1}), 2u);
  EXPECT_THROW(hamming_distance(JointConfiguration{0}, JointConfiguration{0, 1}), DimensionError);
}

TEST(AgedAverage, ZeroDecayKeepsTheLatest) {
  std::vector<Row> h{{1.0, 2.0}, {3.0, 5.0}};
  Row v = aged_estimate(h, 0.0);
  EXPECT_EQ(v, (Row{3.0, 5.0}));
}

TEST(AgedAverage, GeometricWeights) {
  std::vector<Row> h{{1.0}, {0.0}};
  EXPECT_NEAR(aged_estimate(h, 0.5)[0], 0.5 / 1.5, 1e-15);
  EXPECT_THROW(AgedAverage(1.0), DomainError);
}

TEST(ParallelFor, CoversEverySlot) {
  std::vector<int> hit(1000, 0);
  parallel_for(hit.size(), 4, [&](std::size_t k) { hit[k] += 1; });
  for (int h : hit) EXPECT_EQ(h, 1);
}

}  // namespace
