#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "otfair/error.hpp"
#include "otfair/features.hpp"
#include "otfair/matrix.hpp"
#include "otfair/measure.hpp"
#include "otfair/policy.hpp"

namespace otfair {

/// Coupling-weighted mean of row i's counterparts, restricted to `mask`
/// columns (in mask order). Entries at or below `threshold` are ignored.
inline std::vector<double> barycentric_projection(std::size_t i, const Coupling& pi, const Matrix& features_b,
                                                  std::span<const std::size_t> mask, double threshold = 1e-12) {
  if (i >= pi.rows()) throw InputError("recourse", "source index " + std::to_string(i) + " out of range");
  if (features_b.rows() != pi.cols())
    throw InputError("recourse", "target features have " + std::to_string(features_b.rows()) +
                                     " rows but the coupling has " + std::to_string(pi.cols()) + " columns");
  for (std::size_t k : mask)
    if (k >= features_b.cols()) throw InputError("recourse", "mask column " + std::to_string(k) + " out of range");
  std::vector<double> out(mask.size(), 0.0);
  double mass = 0.0;
  auto r = pi.row(i);
  for (std::size_t j = 0; j < r.size(); ++j) {
    if (!(r[j] > threshold)) continue;
    mass += r[j];
    auto b = features_b.row(j);
    for (std::size_t k = 0; k < mask.size(); ++k) out[k] += r[j] * b[mask[k]];
  }
  if (!(mass > 0.0)) throw InputError("recourse", "source individual " + std::to_string(i) + " carries no mass");
  for (double& v : out) v /= mass;
  return out;
}

/// (1 - alpha) a + alpha proj on actionable columns; every other column is
/// copied. `projection` is indexed like actionable_columns(roles).
inline std::vector<double> interpolate(std::span<const double> a, std::span<const double> projection, double alpha,
                                       const std::vector<FeatureRole>& roles) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw InputError("recourse", "alpha " + num(alpha) + " outside [0, 1]");
  if (roles.size() != a.size()) throw InputError("recourse", "feature row and role list differ in length");
  std::vector<double> out(a.begin(), a.end());
  std::size_t k = 0;
  for (std::size_t c = 0; c < a.size(); ++c) {
    if (roles[c] != FeatureRole::actionable) continue;
    if (k >= projection.size()) throw InputError("recourse", "projection shorter than the actionable column count");
    out[c] = (1.0 - alpha) * a[c] + alpha * projection[k++];
  }
  if (k != projection.size()) throw InputError("recourse", "projection longer than the actionable column count");
  return out;
}

struct RecourseResult {
  double alpha = 0.0;
  /// Source individuals (row indices into the source feature table).
  std::vector<std::size_t> individual_ids;
  Matrix new_features;
  std::vector<double> good_label_probability;
  /// Below threshold before recourse, at or above it after.
  std::vector<bool> reclassified;
  double reclassified_fraction = 0.0;
  std::vector<std::size_t> actionable_columns;
  /// Mean change of each actionable column among the reclassified.
  std::vector<double> feature_deltas;
};

/// Re-scores every individual in `subset` after moving its actionable
/// features a fraction alpha toward its barycentric projection.
inline std::vector<RecourseResult> alpha_sweep(const Policy& policy, const Matrix& features_a, const Coupling& pi,
                                               const Matrix& features_b, std::span<const double> alphas,
                                               const std::vector<FeatureRole>& roles, double threshold = 0.5,
                                               std::span<const std::size_t> subset = {},
                                               double support_threshold = 1e-12) {
  if (features_a.rows() != pi.rows())
    throw InputError("recourse", "source features have " + std::to_string(features_a.rows()) +
                                     " rows but the coupling has " + std::to_string(pi.rows()));
  if (features_a.cols() != features_b.cols() || roles.size() != features_a.cols())
    throw InputError("recourse", "feature tables and roles disagree on the column count");
  std::vector<std::size_t> ids(subset.begin(), subset.end());
  if (subset.empty()) {
    ids.resize(features_a.rows());
    for (std::size_t i = 0; i < ids.size(); ++i) ids[i] = i;
  }
  if (ids.empty()) throw InputError("recourse", "no individuals to sweep");
  for (double a : alphas)
    if (!(a >= 0.0 && a <= 1.0)) throw InputError("recourse", "alpha " + num(a) + " outside [0, 1]");

  const auto act = actionable_columns(roles);
  const Matrix original = features_a.select_rows(ids);
  const auto base = apply_policy(policy, original);
  std::vector<std::vector<double>> proj(ids.size());
  for (std::size_t k = 0; k < ids.size(); ++k)
    proj[k] = barycentric_projection(ids[k], pi, features_b, act, support_threshold);

  std::vector<RecourseResult> out;
  out.reserve(alphas.size());
  for (double alpha : alphas) {
    RecourseResult r;
    r.alpha = alpha;
    r.individual_ids = ids;
    r.actionable_columns = act;
    r.new_features = Matrix(ids.size(), features_a.cols());
    for (std::size_t k = 0; k < ids.size(); ++k) {
      auto row = interpolate(original.row(k), proj[k], alpha, roles);
      std::copy(row.begin(), row.end(), r.new_features.row(k).begin());
    }
    const auto scored = apply_policy(policy, r.new_features);
    r.good_label_probability.resize(ids.size());
    r.reclassified.assign(ids.size(), false);
    r.feature_deltas.assign(act.size(), 0.0);
    std::size_t count = 0;
    for (std::size_t k = 0; k < ids.size(); ++k) {
      r.good_label_probability[k] = scored.positive_probability(k);
      if (base.positive_probability(k) < threshold && r.good_label_probability[k] >= threshold) {
        r.reclassified[k] = true;
        ++count;
        for (std::size_t c = 0; c < act.size(); ++c)
          r.feature_deltas[c] += r.new_features(k, act[c]) - original(k, act[c]);
      }
    }
    if (count > 0)
      for (double& d : r.feature_deltas) d /= static_cast<double>(count);
    r.reclassified_fraction = static_cast<double>(count) / static_cast<double>(ids.size());
    out.push_back(std::move(r));
  }
  return out;
}

struct FeatureChangeSummary {
  /// No alpha reclassified anyone; the table is empty.
  bool empty = true;
  std::vector<std::string> features;
  /// Categorical blocks, where the value is the mean category mass moved.
  std::vector<bool> categorical;
  std::vector<double> alphas;
  /// changes(k, f): mean change of raw feature f among those reclassified at
  /// alphas[k]. Numeric features report the signed change in encoded units;
  /// one-hot blocks report half the L1 change of the block.
  Matrix changes;
};

inline FeatureChangeSummary feature_change_summary(const std::vector<RecourseResult>& results,
                                                   const Matrix& features_a,
                                                   const std::vector<FeatureBlock>& blocks) {
  FeatureChangeSummary s;
  for (const auto& b : blocks) {
    s.features.push_back(b.name);
    s.categorical.push_back(b.categorical);
  }
  std::vector<std::vector<double>> rows;
  for (const auto& r : results) {
    std::vector<double> acc(blocks.size(), 0.0);
    std::size_t count = 0;
    for (std::size_t k = 0; k < r.individual_ids.size(); ++k) {
      if (!r.reclassified[k]) continue;
      ++count;
      auto orig = features_a.row(r.individual_ids[k]);
      auto now = r.new_features.row(k);
      for (std::size_t f = 0; f < blocks.size(); ++f) {
        if (blocks[f].role != FeatureRole::actionable) continue;
        if (blocks[f].categorical) {
          double l1 = 0.0;
          for (std::size_t c : blocks[f].columns) l1 += std::abs(now[c] - orig[c]);
          acc[f] += 0.5 * l1;
        } else {
          for (std::size_t c : blocks[f].columns) acc[f] += now[c] - orig[c];
        }
      }
    }
    if (count == 0) continue;
    for (double& v : acc) v /= static_cast<double>(count);
    s.alphas.push_back(r.alpha);
    rows.push_back(std::move(acc));
  }
  s.empty = rows.empty();
  s.changes = Matrix(rows.size(), blocks.size());
  for (std::size_t k = 0; k < rows.size(); ++k)
    for (std::size_t f = 0; f < blocks.size(); ++f) s.changes(k, f) = rows[k][f];
  return s;
}

}  // namespace otfair
