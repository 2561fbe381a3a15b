#include <gtest/gtest.h>

#include <cstring>
#include <numeric>
#include <random>

#include "oracles.hpp"
#include "otfair/recourse.hpp"
#include "otfair/transport.hpp"

namespace otfair {
namespace {

using R = FeatureRole;

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

bool bit_equal(double x, double y) { return std::memcmp(&x, &y, sizeof x) == 0; }

TEST(BarycentricProjection, Examples) {
  auto b = Matrix::from_rows({{2.0, 10.0}, {4.0, 20.0}});
  std::vector<std::size_t> first{0}, both{0, 1};
  auto all_to_one = make_coupling({{0.0, 0.5}, {0.5, 0.0}});
  EXPECT_EQ(barycentric_projection(0, all_to_one, b, both), (std::vector<double>{4.0, 20.0}));
  auto split = make_coupling({{0.25, 0.25}, {0.25, 0.25}});
  EXPECT_DOUBLE_EQ(barycentric_projection(0, split, b, first)[0], 3.0);
  auto id = make_coupling({{0.5, 0.0}, {0.0, 0.5}});
  EXPECT_EQ(barycentric_projection(1, id, b, both), (std::vector<double>{4.0, 20.0}));
  auto empty_row = make_coupling({{0.0, 0.0}, {0.5, 0.5}});
  EXPECT_THROW(barycentric_projection(0, empty_row, b, both), InputError);
}

TEST(Interpolate, EndpointsAndMidpoint) {
  std::vector<double> a{2.0, 7.0, -1.0};
  std::vector<R> roles{R::actionable, R::immutable, R::non_actionable};
  std::vector<double> proj{4.0};
  EXPECT_EQ(interpolate(a, proj, 0.0, roles), a);
  EXPECT_EQ(interpolate(a, proj, 1.0, roles), (std::vector<double>{4.0, 7.0, -1.0}));
  EXPECT_DOUBLE_EQ(interpolate(a, proj, 0.5, roles)[0], 3.0);
  EXPECT_THROW(interpolate(a, proj, 1.5, roles), InputError);
  EXPECT_THROW(interpolate(a, proj, -0.1, roles), InputError);
  EXPECT_THROW(interpolate(a, std::vector<double>{1, 2}, 0.5, roles), InputError);
}

TEST(Interpolate, AffineAndImmutableProperty) {
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> u(-5, 5);
  std::vector<R> roles{R::actionable, R::immutable, R::actionable, R::non_actionable, R::actionable};
  for (int t = 0; t < 200; ++t) {
    std::vector<double> a(5), proj(3);
    for (auto& v : a) v = u(rng);
    for (auto& v : proj) v = u(rng);
    const double alpha = std::uniform_real_distribution<double>(0, 1)(rng);
    auto mid = interpolate(a, proj, alpha, roles);
    auto lo = interpolate(a, proj, 0.0, roles), hi = interpolate(a, proj, 1.0, roles);
    for (std::size_t c = 0; c < 5; ++c) {
      EXPECT_NEAR(mid[c], (1 - alpha) * lo[c] + alpha * hi[c], 1e-12);
      if (roles[c] != R::actionable) {
        EXPECT_TRUE(bit_equal(mid[c], a[c]));
      }
    }
    auto half = interpolate(a, proj, 0.5, roles);
    for (std::size_t c = 0; c < 5; ++c) EXPECT_NEAR(half[c], 0.5 * (lo[c] + hi[c]), 1e-12);
  }
}

// Planted credit instance: column 0 is an actionable savings score the
// policy reads; column 1 is an immutable age; columns 2-3 a non-actionable
// one-hot block. Bad-labeled A have low savings, good-labeled B high.
struct Planted {
  Matrix fa, fb;
  Policy policy;
  Coupling pi;
  std::vector<R> roles{R::actionable, R::immutable, R::non_actionable, R::non_actionable};
};

Planted planted(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd(0.0, 0.3);
  Matrix fa(30, 4), fb(40, 4);
  for (std::size_t i = 0; i < 30; ++i) {
    fa(i, 0) = -1.0 + nd(rng);
    fa(i, 1) = nd(rng);
    fa(i, 2 + i % 2) = 1.0;
  }
  for (std::size_t j = 0; j < 40; ++j) {
    fb(j, 0) = 1.0 + nd(rng);
    fb(j, 1) = nd(rng);
    fb(j, 2 + j % 2) = 1.0;
  }
  Policy p;
  p.weights = {2.0, 0.0, 0.0, 0.0};
  auto ma = empirical_outcome_measure(apply_policy(p, fa));
  auto mb = empirical_outcome_measure(apply_policy(p, fb));
  auto pi = solve_exact(ma, mb, build_cost_matrix(ma, mb));
  return {std::move(fa), std::move(fb), p, std::move(pi)};
}

TEST(AlphaSweep, ZeroAlphaIsNoOp) {
  auto s = planted(1);
  std::vector<double> alphas{0.0};
  auto res = alpha_sweep(s.policy, s.fa, s.pi, s.fb, alphas, s.roles);
  ASSERT_EQ(res.size(), 1u);
  EXPECT_EQ(res[0].new_features, s.fa);
  EXPECT_EQ(res[0].reclassified_fraction, 0.0);
  auto base = apply_policy(s.policy, s.fa);
  for (std::size_t i = 0; i < 30; ++i) EXPECT_EQ(res[0].good_label_probability[i], base.positive_probability(i));
}

TEST(AlphaSweep, PlantedInstanceImprovesAndKeepsImmutables) {
  auto s = planted(2);
  std::vector<double> alphas{0.0, 0.5, 1.0};
  auto res = alpha_sweep(s.policy, s.fa, s.pi, s.fb, alphas, s.roles);
  auto mean = [](const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0) / v.size(); };
  EXPECT_GT(mean(res[2].good_label_probability), mean(res[0].good_label_probability));
  EXPECT_GT(res[2].reclassified_fraction, 0.9);
  std::vector<std::size_t> act{0};
  for (const auto& r : res)
    for (std::size_t i = 0; i < 30; ++i) {
      for (std::size_t c = 1; c < 4; ++c) EXPECT_TRUE(bit_equal(r.new_features(i, c), s.fa(i, c)));
      EXPECT_GE(r.good_label_probability[i], 0.0);
      EXPECT_LE(r.good_label_probability[i], 1.0);
    }
  for (std::size_t i = 0; i < 30; ++i)
    EXPECT_NEAR(res[2].new_features(i, 0), barycentric_projection(i, s.pi, s.fb, act)[0], 1e-12);
  ASSERT_EQ(res[2].feature_deltas.size(), 1u);
  EXPECT_GT(res[2].feature_deltas[0], 1.0);
}

TEST(AlphaSweep, ConstantPolicyStaysAtHalf) {
  auto s = planted(3);
  s.policy.weights.assign(4, 0.0);
  std::vector<double> alphas{0.0, 0.3, 1.0};
  for (const auto& r : alpha_sweep(s.policy, s.fa, s.pi, s.fb, alphas, s.roles))
    for (double p : r.good_label_probability) EXPECT_EQ(p, 0.5);
}

TEST(AlphaSweep, SubsetAndErrors) {
  auto s = planted(4);
  std::vector<double> alphas{1.0};
  std::vector<std::size_t> subset{4, 9};
  auto res = alpha_sweep(s.policy, s.fa, s.pi, s.fb, alphas, s.roles, 0.5, subset);
  EXPECT_EQ(res[0].individual_ids, subset);
  EXPECT_EQ(res[0].new_features.rows(), 2u);
  std::vector<double> bad{1.2};
  EXPECT_THROW(alpha_sweep(s.policy, s.fa, s.pi, s.fb, bad, s.roles), InputError);
  EXPECT_THROW(alpha_sweep(s.policy, s.fb, s.pi, s.fa, alphas, s.roles), InputError);
}

TEST(FeatureChangeSummary, EmptyWhenNobodyReclassified) {
  auto s = planted(5);
  std::vector<double> alphas{0.0};
  auto res = alpha_sweep(s.policy, s.fa, s.pi, s.fb, alphas, s.roles);
  std::vector<FeatureBlock> blocks{{"savings", {0}, false, R::actionable},
                                   {"age", {1}, false, R::immutable},
                                   {"job", {2, 3}, true, R::non_actionable}};
  auto sum = feature_change_summary(res, s.fa, blocks);
  EXPECT_TRUE(sum.empty);
  EXPECT_EQ(sum.changes.rows(), 0u);
}

TEST(FeatureChangeSummary, SingleReclassifiedIndividual) {
  // One source individual at savings -0.3 mapped to a counterpart at 0.5:
  // moving all the way changes savings by +0.8.
  auto fa = Matrix::from_rows({{-0.3, 1.0, 1.0, 0.0}});
  auto fb = Matrix::from_rows({{0.5, -2.0, 0.0, 1.0}});
  auto pi = make_coupling({{1.0}});
  Policy p;
  p.weights = {4.0, 0.0, 0.0, 0.0};
  std::vector<R> roles{R::actionable, R::immutable, R::non_actionable, R::non_actionable};
  std::vector<double> alphas{1.0};
  auto res = alpha_sweep(p, fa, pi, fb, alphas, roles);
  ASSERT_TRUE(res[0].reclassified[0]);
  std::vector<FeatureBlock> blocks{{"savings", {0}, false, R::actionable},
                                   {"age", {1}, false, R::immutable},
                                   {"job", {2, 3}, true, R::non_actionable}};
  auto sum = feature_change_summary(res, fa, blocks);
  ASSERT_FALSE(sum.empty);
  EXPECT_NEAR(sum.changes(0, 0), 0.8, 1e-15);
  EXPECT_EQ(sum.changes(0, 1), 0.0);
  EXPECT_EQ(sum.changes(0, 2), 0.0);
}

TEST(FeatureChangeSummary, OneHotBlockReportsMassMoved) {
  auto fa = Matrix::from_rows({{-1.0, 1.0, 0.0}});
  auto fb = Matrix::from_rows({{1.0, 0.0, 1.0}});
  auto pi = make_coupling({{1.0}});
  Policy p;
  p.weights = {0.0, -1.0, 1.0};
  std::vector<R> roles{R::immutable, R::actionable, R::actionable};
  std::vector<double> alphas{0.75};
  auto res = alpha_sweep(p, fa, pi, fb, alphas, roles);
  ASSERT_TRUE(res[0].reclassified[0]);
  std::vector<FeatureBlock> blocks{{"age", {0}, false, R::immutable}, {"savings_band", {1, 2}, true, R::actionable}};
  auto sum = feature_change_summary(res, fa, blocks);
  EXPECT_NEAR(sum.changes(0, 1), 0.75, 1e-15);
  EXPECT_EQ(sum.changes(0, 0), 0.0);
}

}  // namespace
}  // namespace otfair
