#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "otfair/error.hpp"
#include "otfair/matrix.hpp"
#include "otfair/measure.hpp"

namespace otfair {

inline double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

/// log(1 + e^z) without overflow.
inline double softplus(double z) { return std::max(z, 0.0) + std::log1p(std::exp(-std::abs(z))); }

/// Linear-logistic policy over encoded feature columns. Applying it yields a
/// point on the outcome simplex (P(label 0), P(label 1)).
struct Policy {
  std::vector<double> weights;
  double intercept = 0.0;
  std::vector<std::string> class_labels{"0", "1"};
  /// Encoded column names the weights refer to, in order.
  std::vector<std::string> feature_columns;
  /// Hash of the encoding the policy was fit on; empty when unknown.
  std::string encoder_fingerprint;

  double logit(std::span<const double> x) const {
    double z = intercept;
    for (std::size_t k = 0; k < weights.size(); ++k) z += weights[k] * x[k];
    return z;
  }

  double positive_probability(std::span<const double> x) const { return sigmoid(logit(x)); }
};

/// Outcome vectors, one simplex row per individual.
struct OutcomeSet {
  Matrix outcomes;
  std::vector<std::size_t> source_ids;

  std::size_t size() const noexcept { return outcomes.rows(); }
  double positive_probability(std::size_t i) const { return outcomes(i, outcomes.cols() - 1); }
};

inline OutcomeSet apply_policy(const Policy& p, const Matrix& x) {
  if (x.cols() != p.weights.size())
    throw InputError("policy", "feature matrix has " + std::to_string(x.cols()) +
                                   " columns but the policy expects " + std::to_string(p.weights.size()));
  OutcomeSet out{Matrix(x.rows(), 2), {}};
  out.source_ids.resize(x.rows());
  for (std::size_t i = 0; i < x.rows(); ++i) {
    const double s = p.positive_probability(x.row(i));
    out.outcomes(i, 0) = 1.0 - s;
    out.outcomes(i, 1) = s;
    out.source_ids[i] = i;
  }
  return out;
}

/// Hard labels as degenerate outcome vectors: 0 -> (1, 0), 1 -> (0, 1).
inline OutcomeSet label_outcomes(std::span<const int> labels) {
  OutcomeSet out{Matrix(labels.size(), 2), {}};
  out.source_ids.resize(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    out.outcomes(i, 0) = labels[i] ? 0.0 : 1.0;
    out.outcomes(i, 1) = labels[i] ? 1.0 : 0.0;
    out.source_ids[i] = i;
  }
  return out;
}

/// Uniform-weight measure on the outcome rows.
inline DiscreteMeasure empirical_outcome_measure(const OutcomeSet& outcomes) {
  if (outcomes.size() == 0) throw InputError("policy", "empty outcome set");
  return DiscreteMeasure::uniform(outcomes.outcomes);
}

// ---------------------------------------------------------------------------
// Logistic trainer

struct TrainOptions {
  double l2 = 1e-4;
  int max_iterations = 10'000;
  double tolerance = 1e-6;
  std::uint64_t seed = 0;
};

struct TrainDiagnostics {
  int iterations = 0;
  double gradient_norm = 0.0;
  double loss = 0.0;
};

namespace detail {

inline void check_training_data(const Matrix& x, std::span<const int> y) {
  if (x.rows() != y.size())
    throw InputError("policy", "feature matrix has " + std::to_string(x.rows()) + " rows but " +
                                   std::to_string(y.size()) + " labels");
  if (x.rows() < 2) throw InputError("policy", "need at least two training rows");
  bool has0 = false, has1 = false;
  for (int v : y) {
    if (v != 0 && v != 1) throw InputError("policy", "labels must be 0 or 1");
    (v ? has1 : has0) = true;
  }
  if (!has0 || !has1) throw InputError("policy", "training labels contain a single class");
  for (double v : x.data())
    if (!std::isfinite(v)) throw InputError("policy", "non-finite feature value");
}

}  // namespace detail

/// Mean negative log-likelihood plus (l2/2)|w|^2; the intercept is not
/// penalized. `params` is (w_1..w_d, b).
inline double logistic_loss(const Matrix& x, std::span<const int> y, double l2,
                            std::span<const double> params) {
  const std::size_t d = x.cols();
  double acc = 0.0;
  for (std::size_t i = 0; i < x.rows(); ++i) {
    double z = params[d];
    auto r = x.row(i);
    for (std::size_t k = 0; k < d; ++k) z += params[k] * r[k];
    acc += softplus(z) - (y[i] ? z : 0.0);
  }
  double reg = 0.0;
  for (std::size_t k = 0; k < d; ++k) reg += params[k] * params[k];
  return acc / static_cast<double>(x.rows()) + 0.5 * l2 * reg;
}

inline std::vector<double> logistic_gradient(const Matrix& x, std::span<const int> y, double l2,
                                             std::span<const double> params) {
  const std::size_t d = x.cols();
  std::vector<double> g(d + 1, 0.0);
  for (std::size_t i = 0; i < x.rows(); ++i) {
    double z = params[d];
    auto r = x.row(i);
    for (std::size_t k = 0; k < d; ++k) z += params[k] * r[k];
    const double resid = sigmoid(z) - (y[i] ? 1.0 : 0.0);
    for (std::size_t k = 0; k < d; ++k) g[k] += resid * r[k];
    g[d] += resid;
  }
  const double inv_n = 1.0 / static_cast<double>(x.rows());
  for (std::size_t k = 0; k < d; ++k) g[k] = g[k] * inv_n + l2 * params[k];
  g[d] *= inv_n;
  return g;
}

/// Full-batch gradient descent with Armijo backtracking. Each iteration's
/// trial step is the Barzilai-Borwein estimate from the previous move, so
/// the step adapts to local curvature. Weights start at small seeded
/// values; the problem is strictly convex for l2 > 0 so the seed does not
/// move the optimum.
inline Policy train_logistic(const Matrix& x, std::span<const int> y, const TrainOptions& opt = {},
                             TrainDiagnostics* diag = nullptr) {
  detail::check_training_data(x, y);
  if (!(opt.l2 >= 0.0)) throw InputError("policy", "l2 penalty must be nonnegative");
  const std::size_t d = x.cols();

  std::vector<double> theta(d + 1, 0.0);
  std::mt19937_64 rng(opt.seed);
  std::normal_distribution<double> init(0.0, 1e-3);
  for (std::size_t k = 0; k < d; ++k) theta[k] = init(rng);

  auto norm2 = [](const std::vector<double>& v) {
    double s = 0.0;
    for (double e : v) s += e * e;
    return s;
  };

  double loss = logistic_loss(x, y, opt.l2, theta);
  auto grad = logistic_gradient(x, y, opt.l2, theta);
  double gnorm = std::sqrt(norm2(grad));
  double step = 1.0;
  std::vector<double> trial(d + 1), prev_theta, prev_grad;
  int it = 0;
  for (; it < opt.max_iterations && gnorm > opt.tolerance; ++it) {
    if (!prev_grad.empty()) {
      double ss = 0.0, sy = 0.0;
      for (std::size_t k = 0; k <= d; ++k) {
        const double s = theta[k] - prev_theta[k];
        ss += s * s;
        sy += s * (grad[k] - prev_grad[k]);
      }
      step = sy > 0.0 ? ss / sy : 2.0 * step;
      step = std::clamp(step, 1e-12, 1e12);
    }
    const double g2 = gnorm * gnorm;
    double trial_loss = 0.0;
    while (true) {
      for (std::size_t k = 0; k <= d; ++k) trial[k] = theta[k] - step * grad[k];
      trial_loss = logistic_loss(x, y, opt.l2, trial);
      if (trial_loss <= loss - 1e-4 * step * g2) break;
      step *= 0.5;
      if (step < 1e-30) break;
    }
    if (step < 1e-30) break;
    prev_theta = theta;
    prev_grad = grad;
    theta = trial;
    loss = trial_loss;
    grad = logistic_gradient(x, y, opt.l2, theta);
    gnorm = std::sqrt(norm2(grad));
  }
  if (diag) *diag = {it, gnorm, loss};
  if (gnorm > opt.tolerance)
    throw NumericalError("policy", "logistic training stopped after " + std::to_string(it) +
                                       " iterations with gradient norm " + num(gnorm) + " > " +
                                       num(opt.tolerance));
  Policy p;
  p.weights.assign(theta.begin(), theta.begin() + static_cast<std::ptrdiff_t>(d));
  p.intercept = theta[d];
  return p;
}

}  // namespace otfair
