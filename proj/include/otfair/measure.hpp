#pragma once

#include <cmath>
#include <cstddef>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "otfair/error.hpp"
#include "otfair/matrix.hpp"

namespace otfair {

/// Weighted point cloud. Points are the rows of `points()`; weights are
/// nonnegative and sum to one.
class DiscreteMeasure {
 public:
  static constexpr double kWeightSumTol = 1e-12;

  DiscreteMeasure(Matrix points, std::vector<double> weights)
      : points_(std::move(points)), weights_(std::move(weights)) {
    if (points_.rows() == 0 || points_.cols() == 0)
      throw InputError("ot_core", "measure needs at least one point of positive dimension");
    if (weights_.size() != points_.rows())
      throw InputError("ot_core", "measure has " + std::to_string(points_.rows()) +
                                      " points but " + std::to_string(weights_.size()) +
                                      " weights");
    double sum = 0.0;
    for (double w : weights_) {
      if (!std::isfinite(w) || w < 0.0)
        throw InputError("ot_core", "measure weights must be finite and nonnegative");
      sum += w;
    }
    if (std::abs(sum - 1.0) > kWeightSumTol)
      throw InputError("ot_core", "measure weights sum to " + num(sum) + ", not 1");
    for (double x : points_.data())
      if (!std::isfinite(x)) throw InputError("ot_core", "non-finite point coordinate");
  }

  /// Uniform weights 1/n. The last weight absorbs the rounding so the sum is
  /// 1 to within one ulp.
  static DiscreteMeasure uniform(Matrix points) {
    const std::size_t n = points.rows();
    if (n == 0) throw InputError("ot_core", "uniform measure over an empty point set");
    std::vector<double> w(n, 1.0 / static_cast<double>(n));
    const double head = std::accumulate(w.begin(), w.end() - 1, 0.0);
    w.back() = 1.0 - head;
    return DiscreteMeasure(std::move(points), std::move(w));
  }

  std::size_t size() const noexcept { return points_.rows(); }
  std::size_t dim() const noexcept { return points_.cols(); }
  const Matrix& points() const noexcept { return points_; }
  std::span<const double> point(std::size_t i) const { return points_.row(i); }
  const std::vector<double>& weights() const noexcept { return weights_; }

  bool has_uniform_weights(double tol = 1e-12) const {
    const double u = 1.0 / static_cast<double>(size());
    for (double w : weights_)
      if (std::abs(w - u) > tol) return false;
    return true;
  }

 private:
  Matrix points_;
  std::vector<double> weights_;
};

enum class GroundMetric { euclidean, manhattan };

/// Pairwise ground distances d(a_i, b_j). The Wasserstein order p is stored
/// alongside; the p-th power is applied only inside transport objectives.
class CostMatrix {
 public:
  CostMatrix(Matrix entries, double order) : entries_(std::move(entries)), order_(order) {
    if (!(order_ >= 1.0) || !std::isfinite(order_))
      throw InputError("ot_core", "Wasserstein order must be a finite real >= 1");
    for (double c : entries_.data())
      if (!std::isfinite(c) || c < 0.0)
        throw InputError("ot_core", "cost entries must be finite and nonnegative");
  }

  std::size_t rows() const noexcept { return entries_.rows(); }
  std::size_t cols() const noexcept { return entries_.cols(); }
  double operator()(std::size_t i, std::size_t j) const { return entries_(i, j); }
  const Matrix& entries() const noexcept { return entries_; }
  double order() const noexcept { return order_; }

  /// Entrywise d^p.
  Matrix powered() const {
    Matrix out(rows(), cols());
    auto src = entries_.data();
    auto dst = out.data();
    for (std::size_t k = 0; k < src.size(); ++k) dst[k] = power(src[k]);
    return out;
  }

  double power(double d) const {
    if (order_ == 1.0) return d;
    if (order_ == 2.0) return d * d;
    return std::pow(d, order_);
  }

  double max() const {
    double m = 0.0;
    for (double c : entries_.data()) m = std::max(m, c);
    return m;
  }

  double mean() const {
    auto d = entries_.data();
    return d.empty() ? 0.0 : std::accumulate(d.begin(), d.end(), 0.0) / static_cast<double>(d.size());
  }

 private:
  Matrix entries_;
  double order_;
};

inline double ground_distance(std::span<const double> a, std::span<const double> b,
                              GroundMetric metric = GroundMetric::euclidean) {
  double acc = 0.0;
  if (metric == GroundMetric::manhattan) {
    for (std::size_t k = 0; k < a.size(); ++k) acc += std::abs(a[k] - b[k]);
    return acc;
  }
  for (std::size_t k = 0; k < a.size(); ++k) {
    const double d = a[k] - b[k];
    acc += d * d;
  }
  return std::sqrt(acc);
}

/// C_ij = ||a_i - b_j|| under the chosen ground metric (Euclidean by default).
inline CostMatrix build_cost_matrix(const Matrix& points_a, const Matrix& points_b, double order = 2.0,
                                    GroundMetric metric = GroundMetric::euclidean) {
  if (points_a.cols() != points_b.cols())
    throw InputError("ot_core", "point dimension mismatch: " + std::to_string(points_a.cols()) +
                                    " vs " + std::to_string(points_b.cols()));
  for (double x : points_a.data())
    if (!std::isfinite(x)) throw InputError("ot_core", "non-finite coordinate in first point set");
  for (double x : points_b.data())
    if (!std::isfinite(x)) throw InputError("ot_core", "non-finite coordinate in second point set");
  Matrix c(points_a.rows(), points_b.rows());
  for (std::size_t i = 0; i < points_a.rows(); ++i)
    for (std::size_t j = 0; j < points_b.rows(); ++j)
      c(i, j) = ground_distance(points_a.row(i), points_b.row(j), metric);
  return CostMatrix(std::move(c), order);
}

inline CostMatrix build_cost_matrix(const DiscreteMeasure& a, const DiscreteMeasure& b, double order = 2.0,
                                    GroundMetric metric = GroundMetric::euclidean) {
  return build_cost_matrix(a.points(), b.points(), order, metric);
}

enum class SolverMethod { exact, entropic };

struct SolverConfig {
  SolverMethod method = SolverMethod::exact;
  double entropic_epsilon = 1e-2;
  long max_iterations = 1'000'000;
  double convergence_tol = 1e-9;
  /// Entries at or below this are treated as zero when forming supports.
  double support_threshold = 1e-12;

  void validate() const {
    if (!(entropic_epsilon > 0.0) || !std::isfinite(entropic_epsilon))
      throw InputError("ot_core", "entropic_epsilon must be positive");
    if (!(convergence_tol > 0.0)) throw InputError("ot_core", "convergence_tol must be positive");
    if (max_iterations <= 0) throw InputError("ot_core", "max_iterations must be positive");
    if (!(support_threshold >= 0.0)) throw InputError("ot_core", "support_threshold must be >= 0");
  }
};

struct SolverStats {
  SolverMethod method = SolverMethod::exact;
  long iterations = 0;
  /// Largest absolute deviation of any row or column sum from its marginal.
  double marginal_error = 0.0;
};

/// Transport plan between two measures together with its cost <pi, C^p>.
class Coupling {
 public:
  Coupling(Matrix plan, std::vector<double> source_marginal, std::vector<double> target_marginal,
           double objective, SolverStats stats = {})
      : plan_(std::move(plan)),
        source_(std::move(source_marginal)),
        target_(std::move(target_marginal)),
        objective_(objective),
        stats_(stats) {
    if (plan_.rows() != source_.size() || plan_.cols() != target_.size())
      throw InputError("ot_core", "coupling shape does not match its marginals");
  }

  std::size_t rows() const noexcept { return plan_.rows(); }
  std::size_t cols() const noexcept { return plan_.cols(); }
  double operator()(std::size_t i, std::size_t j) const { return plan_(i, j); }
  std::span<const double> row(std::size_t i) const { return plan_.row(i); }
  const Matrix& plan() const noexcept { return plan_; }
  const std::vector<double>& source_marginal() const noexcept { return source_; }
  const std::vector<double>& target_marginal() const noexcept { return target_; }
  double objective() const noexcept { return objective_; }
  const SolverStats& stats() const noexcept { return stats_; }

  double row_sum(std::size_t i) const {
    auto r = plan_.row(i);
    return std::accumulate(r.begin(), r.end(), 0.0);
  }

  double col_sum(std::size_t j) const {
    double s = 0.0;
    for (std::size_t i = 0; i < rows(); ++i) s += plan_(i, j);
    return s;
  }

  double total_mass() const {
    auto d = plan_.data();
    return std::accumulate(d.begin(), d.end(), 0.0);
  }

  double max_marginal_error() const {
    double err = 0.0;
    for (std::size_t i = 0; i < rows(); ++i) err = std::max(err, std::abs(row_sum(i) - source_[i]));
    for (std::size_t j = 0; j < cols(); ++j) err = std::max(err, std::abs(col_sum(j) - target_[j]));
    return err;
  }

  double min_entry() const {
    double m = 0.0;
    for (double x : plan_.data()) m = std::min(m, x);
    return m;
  }

 private:
  Matrix plan_;
  std::vector<double> source_;
  std::vector<double> target_;
  double objective_;
  SolverStats stats_;
};

}  // namespace otfair
