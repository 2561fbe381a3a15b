#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>
#include <random>

#include "oracles.hpp"
#include "otfair/bias.hpp"
#include "otfair/transport.hpp"

namespace otfair {
namespace {

Coupling make_coupling(std::vector<std::vector<double>> rows) {
  Matrix plan = Matrix::from_rows(rows);
  std::vector<double> a(plan.rows(), 0.0), b(plan.cols(), 0.0);
  for (std::size_t i = 0; i < plan.rows(); ++i)
    for (std::size_t j = 0; j < plan.cols(); ++j) {
      a[i] += plan(i, j);
      b[j] += plan(i, j);
    }
  return Coupling(std::move(plan), std::move(a), std::move(b), 0.0);
}

Matrix scalars(std::vector<double> v) {
  Matrix m(v.size(), 1);
  for (std::size_t i = 0; i < v.size(); ++i) m(i, 0) = v[i];
  return m;
}

Matrix simplex_points(std::mt19937_64& rng, std::size_t n) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Matrix m(n, 2);
  for (std::size_t i = 0; i < n; ++i) {
    const double s = u(rng);
    m(i, 0) = 1.0 - s;
    m(i, 1) = s;
  }
  return m;
}

Coupling optimal_coupling(const Matrix& outcomes_a, const Matrix& outcomes_b) {
  auto ma = DiscreteMeasure::uniform(outcomes_a);
  auto mb = DiscreteMeasure::uniform(outcomes_b);
  return solve_exact(ma, mb, build_cost_matrix(ma, mb));
}

Partition random_partition(std::mt19937_64& rng, std::size_t n, std::size_t groups) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  std::shuffle(idx.begin(), idx.end(), rng);
  Partition p;
  for (std::size_t g = 0; g < groups; ++g) p.add("g" + std::to_string(g), {});
  for (std::size_t k = 0; k < n; ++k) p.groups[k < groups ? k : rng() % groups].push_back(idx[k]);
  return p;
}

const FeatureMetric kScalar = FeatureMetric::all_columns(1);

TEST(SupportSet, Examples) {
  auto id = make_coupling({{0.5, 0.0}, {0.0, 0.5}});
  EXPECT_EQ(support_set(id, 0), (std::vector<std::size_t>{0}));
  auto prod = make_coupling({{0.1, 0.1, 0.1}});
  EXPECT_EQ(support_set(prod, 0), (std::vector<std::size_t>{0, 1, 2}));
  auto dust = make_coupling({{0.25, 1e-15, 0.0}});
  EXPECT_EQ(support_set(dust, 0, 1e-12), (std::vector<std::size_t>{0}));
}

TEST(IndividualBias, IdenticalCounterpartIsZero) {
  auto pi = make_coupling({{1.0}});
  auto f = scalars({1.5});
  EXPECT_EQ(individual_bias(0, pi, f, f, kScalar, BiasConvention::expectation), 0.0);
  EXPECT_EQ(individual_bias(0, pi, f, f, kScalar, BiasConvention::mass_weighted), 0.0);
}

TEST(IndividualBias, SingleSourceConventionsCoincide) {
  auto pi = make_coupling({{0.5, 0.5}});
  auto a = scalars({0.0}), b = scalars({2.0, 4.0});
  EXPECT_DOUBLE_EQ(individual_bias(0, pi, a, b, kScalar, BiasConvention::expectation), 3.0);
  EXPECT_DOUBLE_EQ(individual_bias(0, pi, a, b, kScalar, BiasConvention::mass_weighted), 3.0);
}

TEST(IndividualBias, ExpectationUnderNormalizedRow) {
  auto pi = make_coupling({{0.375, 0.125}, {0.125, 0.375}});
  auto a = scalars({0.0, 0.0}), b = scalars({1.0, 3.0});
  EXPECT_DOUBLE_EQ(individual_bias(0, pi, a, b, kScalar, BiasConvention::expectation), 1.5);
  EXPECT_DOUBLE_EQ(individual_bias(0, pi, a, b, kScalar, BiasConvention::mass_weighted), 0.75);
}

TEST(IndividualBias, ZeroMassRowRejected) {
  auto pi = make_coupling({{0.0, 0.0}, {0.5, 0.5}});
  auto a = scalars({0.0, 1.0}), b = scalars({1.0, 3.0});
  EXPECT_THROW(individual_bias(0, pi, a, b, kScalar), InputError);
  EXPECT_THROW(individual_bias(0, pi, a, b, kScalar, BiasConvention::expectation), InputError);
}

TEST(IndividualBias, ShapeAndMaskValidation) {
  auto pi = make_coupling({{0.5, 0.5}});
  auto a = scalars({0.0}), b = scalars({1.0, 3.0});
  EXPECT_THROW(individual_bias(0, pi, b, a, kScalar), InputError);
  FeatureMetric bad;
  EXPECT_THROW(individual_bias(0, pi, a, b, bad), InputError);
  bad.feature_mask = {3};
  EXPECT_THROW(individual_bias(0, pi, a, b, bad), InputError);
}

TEST(IndividualBias, MaskRestrictsDistance) {
  auto pi = make_coupling({{1.0}});
  auto a = Matrix::from_rows({{0.0, 5.0}}), b = Matrix::from_rows({{3.0, -7.0}});
  FeatureMetric first;
  first.feature_mask = {0};
  EXPECT_DOUBLE_EQ(individual_bias(0, pi, a, b, first), 3.0);
  EXPECT_DOUBLE_EQ(individual_bias(0, pi, a, b, FeatureMetric::all_columns(2)), std::hypot(3.0, 12.0));
}

TEST(NormalizedBias, Examples) {
  auto a = scalars({0.0}), b = scalars({1.0, 5.0});
  EXPECT_DOUBLE_EQ(normalized_individual_bias(0, make_coupling({{0.0, 1.0}}), a, b, kScalar).value, 1.0);
  EXPECT_DOUBLE_EQ(normalized_individual_bias(0, make_coupling({{1.0, 0.0}}), a, b, kScalar).value, 0.2);
  for (double delta : {0.01, 1.0, 250.0}) {
    auto eq = scalars({delta, -delta});
    auto r = normalized_individual_bias(0, make_coupling({{0.5, 0.5}}), a, eq, kScalar);
    EXPECT_DOUBLE_EQ(r.value, 1.0);
    EXPECT_FALSE(r.degenerate);
  }
  auto same = scalars({0.0, 0.0});
  auto d = normalized_individual_bias(0, make_coupling({{0.5, 0.5}}), a, same, kScalar);
  EXPECT_EQ(d.value, 0.0);
  EXPECT_TRUE(d.degenerate);
}

TEST(NormalizedBias, PerIndividualMaxNormalizationMatchesUStar) {
  std::mt19937_64 rng(17);
  auto oa = simplex_points(rng, 9), ob = simplex_points(rng, 9);
  auto fa = testing::random_points(rng, 9, 3), fb = testing::random_points(rng, 9, 3);
  auto pi = optimal_coupling(oa, ob);
  auto metric = FeatureMetric::all_columns(3);
  metric.normalization = FeatureNormalization::per_individual_max;
  for (std::size_t i = 0; i < 9; ++i) {
    const double u = normalized_individual_bias(i, pi, fa, fb, FeatureMetric::all_columns(3)).value;
    EXPECT_GE(u, 0.0);
    EXPECT_LE(u, 1.0 + 1e-12);
    EXPECT_NEAR(individual_bias(i, pi, fa, fb, metric, BiasConvention::expectation), u, 1e-12);
  }
}

TEST(GroupBias, SingletonAndAdditivity) {
  std::mt19937_64 rng(5);
  auto pi = optimal_coupling(simplex_points(rng, 8), simplex_points(rng, 11));
  auto fa = testing::random_points(rng, 8, 2), fb = testing::random_points(rng, 11, 2);
  auto m = FeatureMetric::all_columns(2);
  std::vector<std::size_t> one{3}, g1{0, 1, 2}, g2{4, 5, 6, 7}, both{0, 1, 2, 4, 5, 6, 7};
  EXPECT_EQ(group_bias(one, pi, fa, fb, m), individual_bias(3, pi, fa, fb, m));
  EXPECT_NEAR(group_bias(both, pi, fa, fb, m), group_bias(g1, pi, fa, fb, m) + group_bias(g2, pi, fa, fb, m),
              1e-15);
  EXPECT_THROW(group_bias(std::vector<std::size_t>{}, pi, fa, fb, m), InputError);
}

TEST(GroupBias, SelfAuditIsNull) {
  std::mt19937_64 rng(23);
  auto outcomes = simplex_points(rng, 40);
  auto features = testing::random_points(rng, 40, 4);
  auto pi = optimal_coupling(outcomes, outcomes);
  std::vector<std::size_t> all(40);
  std::iota(all.begin(), all.end(), 0);
  EXPECT_LE(group_bias(all, pi, features, features, FeatureMetric::all_columns(4)), 1e-9);
}

TEST(BiasProperties, ConventionConsistencyUnderUniformWeights) {
  std::mt19937_64 rng(31);
  for (int t = 0; t < 30; ++t) {
    const std::size_t n1 = 2 + rng() % 12, n2 = 2 + rng() % 12;
    auto pi = optimal_coupling(simplex_points(rng, n1), simplex_points(rng, n2));
    auto fa = testing::random_points(rng, n1, 3), fb = testing::random_points(rng, n2, 3);
    auto m = FeatureMetric::all_columns(3);
    for (std::size_t i = 0; i < n1; ++i) {
      const double e = individual_bias(i, pi, fa, fb, m, BiasConvention::expectation);
      const double w = individual_bias(i, pi, fa, fb, m, BiasConvention::mass_weighted);
      EXPECT_GE(w, 0.0);
      EXPECT_NEAR(e, static_cast<double>(n1) * w, 1e-12 * std::max(1.0, e));
    }
  }
}

TEST(BiasProperties, ZeroDistanceOnSupport) {
  // Masked column of every source equals that of every target in its support.
  auto pi = make_coupling({{0.25, 0.25, 0.0}, {0.0, 0.0, 0.5}});
  auto a = Matrix::from_rows({{1.0, 9.0}, {2.0, -4.0}});
  auto b = Matrix::from_rows({{1.0, 0.0}, {1.0, 3.0}, {2.0, 7.0}});
  FeatureMetric m;
  m.feature_mask = {0};
  EXPECT_EQ(individual_bias(0, pi, a, b, m), 0.0);
  EXPECT_EQ(individual_bias(1, pi, a, b, m, BiasConvention::expectation), 0.0);
}

TEST(Decompose, SingleGroupPartitions) {
  std::mt19937_64 rng(8);
  auto pi = optimal_coupling(simplex_points(rng, 6), simplex_points(rng, 7));
  auto fa = testing::random_points(rng, 6, 2), fb = testing::random_points(rng, 7, 2);
  auto m = FeatureMetric::all_columns(2);
  auto rep = decompose(pi, fa, fb, single_group(6), single_group(7), m);
  ASSERT_EQ(rep.decomposition.rows(), 1u);
  ASSERT_EQ(rep.decomposition.cols(), 1u);
  EXPECT_NEAR(rep.mass_shares(0, 0), 1.0, 1e-12);
  std::vector<std::size_t> all(6);
  std::iota(all.begin(), all.end(), 0);
  EXPECT_NEAR(rep.decomposition(0, 0), group_bias(all, pi, fa, fb, m), 1e-12);
  EXPECT_NEAR(rep.total_bias(), rep.group_bias[0], 0.0);
}

TEST(Decompose, IdentityCouplingGivesIdentityShares) {
  auto pi = make_coupling({{0.25, 0, 0, 0}, {0, 0.25, 0, 0}, {0, 0, 0.25, 0}, {0, 0, 0, 0.25}});
  auto f = scalars({0, 1, 2, 3});
  Partition p;
  p.add("low", {0, 1});
  p.add("high", {2, 3});
  auto rep = decompose(pi, f, f, p, p, kScalar);
  EXPECT_EQ(rep.mass_shares(0, 0), 1.0);
  EXPECT_EQ(rep.mass_shares(0, 1), 0.0);
  EXPECT_EQ(rep.mass_shares(1, 0), 0.0);
  EXPECT_EQ(rep.mass_shares(1, 1), 1.0);
  EXPECT_EQ(rep.total_bias(), 0.0);
}

TEST(Decompose, PlantedForcedMatching) {
  // A-group g = {0, 1} sits at outcomes near those of B-group h = {2, 3},
  // far from h' = {0, 1}; the permutation oracle confirms the unique optimum
  // sends g entirely into h.
  auto oa = Matrix::from_rows({{0.9, 0.1}, {0.85, 0.15}, {0.2, 0.8}, {0.1, 0.9}});
  auto ob = Matrix::from_rows({{0.15, 0.85}, {0.05, 0.95}, {0.88, 0.12}, {0.92, 0.08}});
  auto c = build_cost_matrix(oa, ob).powered();
  std::vector<std::size_t> perm{0, 1, 2, 3};
  double best = 1e300;
  int best_count = 0;
  std::vector<std::size_t> best_perm;
  do {
    double s = 0;
    for (std::size_t i = 0; i < 4; ++i) s += c(i, perm[i]);
    if (s < best - 1e-12) {
      best = s;
      best_count = 1;
      best_perm = perm;
    } else if (std::abs(s - best) <= 1e-12) {
      ++best_count;
    }
  } while (std::next_permutation(perm.begin(), perm.end()));
  ASSERT_EQ(best_count, 1);
  ASSERT_GE(std::min(best_perm[0], best_perm[1]), 2u);
  EXPECT_NEAR(best / 4.0, testing::permutation_minimum(c), 1e-15);

  auto pi = optimal_coupling(oa, ob);
  EXPECT_NEAR(pi.objective(), best / 4.0, 1e-12);
  Partition pa, pb;
  pa.add("g", {0, 1});
  pa.add("other", {2, 3});
  pb.add("h'", {0, 1});
  pb.add("h", {2, 3});
  auto f = scalars({0, 1, 2, 3});
  auto rep = decompose(pi, f, f, pa, pb, kScalar);
  EXPECT_NEAR(rep.mass_shares(0, 1), 1.0, 1e-12);
  EXPECT_NEAR(rep.mass_shares(0, 0), 0.0, 1e-12);
}

TEST(Decompose, RowSumIdentityProperty) {
  std::mt19937_64 rng(2024);
  for (int t = 0; t < 60; ++t) {
    const std::size_t n1 = 4 + rng() % 20, n2 = 4 + rng() % 20;
    auto pi = optimal_coupling(simplex_points(rng, n1), simplex_points(rng, n2));
    auto fa = testing::random_points(rng, n1, 3, -2, 2), fb = testing::random_points(rng, n2, 3, -2, 2);
    auto pa = random_partition(rng, n1, 2 + rng() % 3), pb = random_partition(rng, n2, 2 + rng() % 3);
    for (auto conv : {BiasConvention::mass_weighted, BiasConvention::expectation}) {
      auto rep = decompose(pi, fa, fb, pa, pb, FeatureMetric::all_columns(3), conv);
      for (std::size_t g = 0; g < pa.size(); ++g) {
        double dsum = 0, msum = 0;
        for (std::size_t h = 0; h < pb.size(); ++h) {
          EXPECT_GE(rep.decomposition(g, h), 0.0);
          EXPECT_GE(rep.mass_shares(g, h), 0.0);
          EXPECT_LE(rep.mass_shares(g, h), 1.0 + 1e-15);
          dsum += rep.decomposition(g, h);
          msum += rep.mass_shares(g, h);
        }
        EXPECT_NEAR(dsum, rep.group_bias[g], 1e-10);
        EXPECT_NEAR(msum, 1.0, 1e-10);
        const double direct = group_bias(pa.groups[g], pi, fa, fb, FeatureMetric::all_columns(3), conv);
        EXPECT_NEAR(rep.group_bias[g], direct, 1e-12);
      }
    }
  }
}

TEST(Decompose, PartitionValidation) {
  auto pi = make_coupling({{0.5, 0.0}, {0.0, 0.5}});
  auto f = scalars({0, 1});
  Partition overlap, gap, ok = single_group(2);
  overlap.add("x", {0, 1});
  overlap.add("y", {1});
  gap.add("x", {0});
  EXPECT_THROW(decompose(pi, f, f, overlap, ok, kScalar), InputError);
  EXPECT_THROW(decompose(pi, f, f, ok, gap, kScalar), InputError);
}

}  // namespace
}  // namespace otfair
