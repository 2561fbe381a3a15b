#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "otfair/error.hpp"
#include "otfair/matrix.hpp"
#include "otfair/measure.hpp"
#include "otfair/partition.hpp"
#include "otfair/transport.hpp"

namespace otfair {

enum class BiasConvention {
  /// Expected distance under the normalized coupling row.
  expectation,
  /// Distances weighted by raw coupling mass; sums over individuals give
  /// population totals directly.
  mass_weighted,
};

enum class FeatureNormalization { none, per_individual_max };

/// Feature-space distance d(a, b) restricted to a subset of encoded columns.
struct FeatureMetric {
  GroundMetric kind = GroundMetric::euclidean;
  std::vector<std::size_t> feature_mask;
  /// per_individual_max divides each d(a_i, .) by max_j d(a_i, b_j).
  FeatureNormalization normalization = FeatureNormalization::none;

  static FeatureMetric all_columns(std::size_t d) {
    FeatureMetric m;
    m.feature_mask.resize(d);
    std::iota(m.feature_mask.begin(), m.feature_mask.end(), std::size_t{0});
    return m;
  }

  void validate(std::size_t columns) const {
    if (feature_mask.empty()) throw InputError("bias", "feature mask is empty");
    for (std::size_t k : feature_mask)
      if (k >= columns)
        throw InputError("bias", "feature mask column " + std::to_string(k) + " out of range (" +
                                     std::to_string(columns) + " encoded columns)");
  }

  double distance(std::span<const double> a, std::span<const double> b) const {
    double acc = 0.0;
    if (kind == GroundMetric::manhattan) {
      for (std::size_t k : feature_mask) acc += std::abs(a[k] - b[k]);
      return acc;
    }
    for (std::size_t k : feature_mask) {
      const double t = a[k] - b[k];
      acc += t * t;
    }
    return std::sqrt(acc);
  }
};

/// Targets receiving more than `threshold` mass from source i.
inline std::vector<std::size_t> support_set(const Coupling& pi, std::size_t i, double threshold = 1e-12) {
  if (i >= pi.rows()) throw InputError("bias", "source index " + std::to_string(i) + " out of range");
  std::vector<std::size_t> out;
  auto r = pi.row(i);
  for (std::size_t j = 0; j < r.size(); ++j)
    if (r[j] > threshold) out.push_back(j);
  return out;
}

namespace detail {

struct BiasProblem {
  const Coupling& pi;
  const Matrix& a;
  const Matrix& b;
  const FeatureMetric& metric;
  double threshold;

  void check() const {
    if (a.rows() != pi.rows() || b.rows() != pi.cols())
      throw InputError("bias", "feature tables (" + std::to_string(a.rows()) + ", " + std::to_string(b.rows()) +
                                   " rows) do not match the coupling shape " + std::to_string(pi.rows()) + "x" +
                                   std::to_string(pi.cols()));
    if (a.cols() != b.cols()) throw InputError("bias", "feature tables differ in column count");
    metric.validate(a.cols());
  }

  double max_distance(std::size_t i) const {
    double m = 0.0;
    for (std::size_t j = 0; j < b.rows(); ++j) m = std::max(m, metric.distance(a.row(i), b.row(j)));
    return m;
  }

  /// Multiplier on raw distances of row i given its largest distance.
  double distance_scale(double dmax) const {
    if (metric.normalization == FeatureNormalization::none) return 1.0;
    return dmax > 0.0 ? 1.0 / dmax : 0.0;
  }

  /// Sum of coupling mass over the support of row i; throws when empty.
  double row_mass(std::size_t i) const {
    double s = 0.0;
    for (double v : pi.row(i))
      if (v > threshold) s += v;
    if (!(s > 0.0)) throw InputError("bias", "source individual " + std::to_string(i) + " carries no mass");
    return s;
  }

  /// Multiplier turning mass-weighted sums into the chosen convention.
  static double convention_scale(double mass, BiasConvention c) {
    return c == BiasConvention::mass_weighted ? 1.0 : 1.0 / mass;
  }
};

}  // namespace detail

/// u(a_i): coupling-weighted distance from a_i to its counterparts.
inline double individual_bias(std::size_t i, const Coupling& pi, const Matrix& features_a, const Matrix& features_b,
                              const FeatureMetric& metric,
                              BiasConvention convention = BiasConvention::mass_weighted, double threshold = 1e-12) {
  detail::BiasProblem p{pi, features_a, features_b, metric, threshold};
  p.check();
  if (i >= pi.rows()) throw InputError("bias", "source index " + std::to_string(i) + " out of range");
  const double scale = p.convention_scale(p.row_mass(i), convention);
  const double dscale =
      metric.normalization == FeatureNormalization::none ? 1.0 : p.distance_scale(p.max_distance(i));
  auto r = pi.row(i);
  double acc = 0.0;
  for (std::size_t j = 0; j < r.size(); ++j)
    if (r[j] > threshold) acc += r[j] * metric.distance(features_a.row(i), features_b.row(j));
  return acc * dscale * scale;
}

struct NormalizedBias {
  double value = 0.0;
  /// Every distance from a_i is zero; value reported as 0.
  bool degenerate = false;
};

/// u*(a_i) = n1 * sum_j pi_ij d(a_i, b_j) / max_j d(a_i, b_j).
inline NormalizedBias normalized_individual_bias(std::size_t i, const Coupling& pi, const Matrix& features_a,
                                                 const Matrix& features_b, const FeatureMetric& metric,
                                                 double threshold = 1e-12) {
  detail::BiasProblem p{pi, features_a, features_b, metric, threshold};
  p.check();
  if (i >= pi.rows()) throw InputError("bias", "source index " + std::to_string(i) + " out of range");
  const double dmax = p.max_distance(i);
  if (dmax == 0.0) return {0.0, true};
  auto r = pi.row(i);
  double acc = 0.0;
  for (std::size_t j = 0; j < r.size(); ++j)
    if (r[j] > threshold) acc += r[j] * metric.distance(features_a.row(i), features_b.row(j));
  return {static_cast<double>(pi.rows()) * acc / dmax, false};
}

/// U(G) = sum of u(g) over g in G.
inline double group_bias(std::span<const std::size_t> group, const Coupling& pi, const Matrix& features_a,
                         const Matrix& features_b, const FeatureMetric& metric,
                         BiasConvention convention = BiasConvention::mass_weighted, double threshold = 1e-12) {
  if (group.empty()) throw InputError("bias", "group is empty");
  double s = 0.0;
  for (std::size_t i : group) s += individual_bias(i, pi, features_a, features_b, metric, convention, threshold);
  return s;
}

struct BiasReport {
  BiasConvention convention = BiasConvention::mass_weighted;
  std::vector<double> individual_bias;
  std::vector<double> normalized_individual_bias;
  std::vector<bool> normalized_degenerate;
  std::vector<std::string> groups_a;
  std::vector<std::string> groups_b;
  std::vector<double> group_bias;
  /// decomposition(g, h): bias of A-group g accrued on B-group h.
  Matrix decomposition;
  /// mass_shares(g, h): fraction of A-group g's transported mass landing in
  /// B-group h.
  Matrix mass_shares;

  double total_bias() const { return std::accumulate(group_bias.begin(), group_bias.end(), 0.0); }
};

/// Group-by-group additive split of bias. Rows of `decomposition` sum to
/// `group_bias`; rows of `mass_shares` sum to one.
inline BiasReport decompose(const Coupling& pi, const Matrix& features_a, const Matrix& features_b,
                            const Partition& partition_a, const Partition& partition_b, const FeatureMetric& metric,
                            BiasConvention convention = BiasConvention::mass_weighted, double threshold = 1e-12) {
  detail::BiasProblem p{pi, features_a, features_b, metric, threshold};
  p.check();
  group_assignment(partition_a, pi.rows(), "bias", "source partition");
  const auto owner_b = group_assignment(partition_b, pi.cols(), "bias", "target partition");

  const std::size_t ga = partition_a.size(), gb = partition_b.size();
  BiasReport rep;
  rep.convention = convention;
  rep.groups_a = partition_a.names;
  rep.groups_b = partition_b.names;
  rep.individual_bias.assign(pi.rows(), 0.0);
  rep.normalized_individual_bias.assign(pi.rows(), 0.0);
  rep.normalized_degenerate.assign(pi.rows(), false);
  rep.group_bias.assign(ga, 0.0);
  rep.decomposition = Matrix(ga, gb);
  rep.mass_shares = Matrix(ga, gb);

  const double n1 = static_cast<double>(pi.rows());
  std::vector<double> block(gb);
  for (std::size_t g = 0; g < ga; ++g) {
    double group_mass = 0.0;
    for (std::size_t i : partition_a.groups[g]) {
      const double mass = p.row_mass(i);
      const double scale = p.convention_scale(mass, convention);
      const double dmax = p.max_distance(i);
      const double dscale = p.distance_scale(dmax);
      std::fill(block.begin(), block.end(), 0.0);
      double raw = 0.0;
      auto r = pi.row(i);
      for (std::size_t j = 0; j < r.size(); ++j) {
        if (!(r[j] > threshold)) continue;
        const double w = r[j] * metric.distance(features_a.row(i), features_b.row(j));
        raw += w;
        block[owner_b[j]] += w;
        rep.mass_shares(g, owner_b[j]) += r[j];
      }
      group_mass += mass;
      rep.individual_bias[i] = raw * dscale * scale;
      rep.group_bias[g] += rep.individual_bias[i];
      for (std::size_t h = 0; h < gb; ++h) rep.decomposition(g, h) += block[h] * dscale * scale;
      if (dmax > 0.0)
        rep.normalized_individual_bias[i] = n1 * raw / dmax;
      else
        rep.normalized_degenerate[i] = true;
    }
    for (std::size_t h = 0; h < gb; ++h) rep.mass_shares(g, h) /= group_mass;
  }
  return rep;
}

inline const char* to_string(BiasConvention c) {
  return c == BiasConvention::expectation ? "expectation" : "mass_weighted";
}

}  // namespace otfair
