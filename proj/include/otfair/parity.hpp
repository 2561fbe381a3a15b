#pragma once

#include <cmath>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "otfair/error.hpp"

namespace otfair {

// Group convention throughout: group label 0 is the reference group A,
// group label 1 is the compared group B.

struct GroupRates {
  std::size_t count = 0;
  double positive_rate = 0.0;
  /// NaN when the group has no truth-positives (or truth was not given).
  double true_positive_rate = std::numeric_limits<double>::quiet_NaN();
};

struct DisparateImpact {
  /// P(Yhat=1 | B) / P(Yhat=1 | A).
  double ratio = 1.0;
  /// ratio <= threshold (the 80% rule).
  bool admits_disparate_impact = false;
  /// No positives in either group; ratio reported as 1.
  bool degenerate = false;
  /// A has no positives but B does; ratio is +infinity.
  bool infinite = false;
  double rate_a = 0.0;
  double rate_b = 0.0;
  static constexpr const char* convention = "P(Yhat=1|group=1) / P(Yhat=1|group=0)";
};

namespace detail {

inline void check_groups(std::size_t n, std::span<const int> group, const char* what) {
  if (group.size() != n)
    throw InputError("policy", std::string(what) + " and group labels differ in length");
  std::size_t n1 = 0;
  for (int g : group) {
    if (g != 0 && g != 1) throw InputError("policy", "group labels must be 0 or 1");
    n1 += g;
  }
  if (n1 == 0 || n1 == n) throw InputError("policy", "both groups must be nonempty");
}

}  // namespace detail

inline DisparateImpact disparate_impact_ratio(std::span<const int> predictions, std::span<const int> group,
                                              double threshold = 0.8) {
  detail::check_groups(predictions.size(), group, "predictions");
  double pos[2] = {0, 0}, cnt[2] = {0, 0};
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    cnt[group[i]] += 1;
    pos[group[i]] += predictions[i] ? 1 : 0;
  }
  DisparateImpact di;
  di.rate_a = pos[0] / cnt[0];
  di.rate_b = pos[1] / cnt[1];
  if (di.rate_a == 0.0 && di.rate_b == 0.0) {
    di.ratio = 1.0;
    di.degenerate = true;
  } else if (di.rate_a == 0.0) {
    di.ratio = std::numeric_limits<double>::infinity();
    di.infinite = true;
  } else {
    di.ratio = di.rate_b / di.rate_a;
  }
  di.admits_disparate_impact = di.ratio <= threshold;
  return di;
}

/// E[h(X) | S=1] - E[h(X) | S=0] for hard labels or scores.
inline double demographic_parity_difference(std::span<const double> scores, std::span<const int> group) {
  detail::check_groups(scores.size(), group, "scores");
  double sum[2] = {0, 0}, cnt[2] = {0, 0};
  for (std::size_t i = 0; i < scores.size(); ++i) {
    sum[group[i]] += scores[i];
    cnt[group[i]] += 1;
  }
  return sum[1] / cnt[1] - sum[0] / cnt[0];
}

inline double demographic_parity_difference(std::span<const int> predictions, std::span<const int> group) {
  std::vector<double> s(predictions.begin(), predictions.end());
  return demographic_parity_difference(std::span<const double>(s), group);
}

/// TPR(S=1) - TPR(S=0).
inline double equal_opportunity_gap(std::span<const int> predictions, std::span<const int> truth,
                                    std::span<const int> group) {
  detail::check_groups(predictions.size(), group, "predictions");
  if (truth.size() != predictions.size())
    throw InputError("policy", "predictions and truth differ in length");
  double tp[2] = {0, 0}, p[2] = {0, 0};
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    if (!truth[i]) continue;
    p[group[i]] += 1;
    tp[group[i]] += predictions[i] ? 1 : 0;
  }
  for (int g : {0, 1})
    if (p[g] == 0)
      throw InputError("policy", "group " + std::to_string(g) + " has no truth-positive individuals");
  return tp[1] / p[1] - tp[0] / p[0];
}

struct ParityReport {
  DisparateImpact disparate_impact;
  double ddp = 0.0;
  /// NaN when truth is absent or a group lacks truth-positives.
  double equal_opportunity_gap = std::numeric_limits<double>::quiet_NaN();
  GroupRates group_rates[2];
};

inline ParityReport parity_report(std::span<const int> predictions, std::span<const int> group,
                                  std::span<const int> truth = {}, double di_threshold = 0.8) {
  ParityReport r;
  r.disparate_impact = disparate_impact_ratio(predictions, group, di_threshold);
  r.ddp = demographic_parity_difference(predictions, group);
  double tp[2] = {0, 0}, p[2] = {0, 0};
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    auto& gr = r.group_rates[group[i]];
    ++gr.count;
    gr.positive_rate += predictions[i] ? 1 : 0;
    if (!truth.empty() && truth[i]) {
      p[group[i]] += 1;
      tp[group[i]] += predictions[i] ? 1 : 0;
    }
  }
  for (int g : {0, 1}) {
    auto& gr = r.group_rates[g];
    gr.positive_rate /= static_cast<double>(gr.count);
    if (p[g] > 0) gr.true_positive_rate = tp[g] / p[g];
  }
  if (!truth.empty() && p[0] > 0 && p[1] > 0) r.equal_opportunity_gap = equal_opportunity_gap(predictions, truth, group);
  return r;
}

/// Hard labels at a decision threshold on P(label 1).
inline std::vector<int> threshold_labels(std::span<const double> probabilities, double threshold = 0.5) {
  std::vector<int> out(probabilities.size());
  for (std::size_t i = 0; i < probabilities.size(); ++i) out[i] = probabilities[i] >= threshold ? 1 : 0;
  return out;
}

}  // namespace otfair
