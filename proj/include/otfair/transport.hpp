#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

#include "otfair/error.hpp"
#include "otfair/measure.hpp"
#include "otfair/network_simplex.hpp"

namespace otfair {

namespace detail {

inline void check_problem(const DiscreteMeasure& m1, const DiscreteMeasure& m2, const CostMatrix& c) {
  if (c.rows() != m1.size() || c.cols() != m2.size())
    throw InputError("ot_core", "cost matrix is " + std::to_string(c.rows()) + "x" +
                                    std::to_string(c.cols()) + " but measures have " +
                                    std::to_string(m1.size()) + " and " + std::to_string(m2.size()) +
                                    " points");
  const auto& a = m1.weights();
  const auto& b = m2.weights();
  const double sa = std::accumulate(a.begin(), a.end(), 0.0);
  const double sb = std::accumulate(b.begin(), b.end(), 0.0);
  if (std::abs(sa - sb) > 1e-9)
    throw InputError("ot_core", "marginal masses differ: " + num(sa) + " vs " +
                                    num(sb));
}

inline double transport_cost(const Matrix& plan, const Matrix& powered_cost) {
  auto p = plan.data();
  auto c = powered_cost.data();
  double acc = 0.0;
  for (std::size_t k = 0; k < p.size(); ++k) acc += p[k] * c[k];
  return acc;
}

inline double marginal_error(const Matrix& plan, const std::vector<double>& a,
                             const std::vector<double>& b) {
  double err = 0.0;
  std::vector<double> cols(plan.cols(), 0.0);
  for (std::size_t i = 0; i < plan.rows(); ++i) {
    double r = 0.0;
    for (std::size_t j = 0; j < plan.cols(); ++j) {
      r += plan(i, j);
      cols[j] += plan(i, j);
    }
    err = std::max(err, std::abs(r - a[i]));
  }
  for (std::size_t j = 0; j < plan.cols(); ++j) err = std::max(err, std::abs(cols[j] - b[j]));
  return err;
}

inline double log_sum_exp(const std::vector<double>& v) {
  double m = -std::numeric_limits<double>::infinity();
  for (double x : v) m = std::max(m, x);
  if (!std::isfinite(m)) return m;
  double s = 0.0;
  for (double x : v) s += std::exp(x - m);
  return m + std::log(s);
}

}  // namespace detail

/// Minimizes sum_ij pi_ij * C_ij^p over couplings of m1 and m2 with the
/// network simplex.
inline Coupling solve_exact(const DiscreteMeasure& m1, const DiscreteMeasure& m2, const CostMatrix& c,
                            long max_pivots = 10'000'000) {
  detail::check_problem(m1, m2, c);
  const Matrix cp = c.powered();
  detail::TransportNetworkSimplex solver(m1.weights(), m2.weights(), cp);
  auto res = solver.run(max_pivots);
  if (!res.converged)
    throw NumericalError("ot_core", "network simplex did not reach optimality within " +
                                        std::to_string(max_pivots) + " pivots");
  if (res.artificial_residual > 1e-9)
    throw NumericalError("ot_core", "network simplex left " + num(res.artificial_residual) +
                                        " mass on artificial arcs after " +
                                        std::to_string(res.pivots) + " pivots");
  const double obj = detail::transport_cost(res.flow, cp);
  const SolverStats stats{SolverMethod::exact, res.pivots,
                          detail::marginal_error(res.flow, m1.weights(), m2.weights())};
  return Coupling(std::move(res.flow), m1.weights(), m2.weights(), obj, stats);
}

/// Sinkhorn fixed point of the entropically regularized problem, iterated
/// on the dual potentials in the log domain. `objective()` is <pi, C^p>
/// without the entropy term.
inline Coupling solve_entropic(const DiscreteMeasure& m1, const DiscreteMeasure& m2, const CostMatrix& c,
                               const SolverConfig& config) {
  config.validate();
  detail::check_problem(m1, m2, c);
  const Matrix cp = c.powered();
  const double eps = config.entropic_epsilon;
  const std::size_t n1 = m1.size(), n2 = m2.size();
  const auto& a = m1.weights();
  const auto& b = m2.weights();

  std::vector<double> log_a(n1), log_b(n2);
  for (std::size_t i = 0; i < n1; ++i) log_a[i] = std::log(a[i]);
  for (std::size_t j = 0; j < n2; ++j) log_b[j] = std::log(b[j]);

  std::vector<double> f(n1, 0.0), g(n2, 0.0), scratch_row(n2), scratch_col(n1);
  const auto underflow = [&](long it) {
    return NumericalError("ot_core", "Sinkhorn scaling underflowed at iteration " +
                                         std::to_string(it) + " with epsilon=" + num(eps) +
                                         "; use a larger epsilon");
  };

  // Below this ratio eps*log(weight) vanishes against the potentials'
  // rounding error and the iteration cannot make progress.
  double cmax = 0.0;
  for (double x : cp.data()) cmax = std::max(cmax, x);
  if (eps < 1e-13 * cmax)
    throw NumericalError("ot_core", "epsilon=" + num(eps) + " is too small for cost scale " +
                                        num(cmax) + "; use a larger epsilon");

  long it = 0;
  // One f/g sweep at regularization e; returns the row-marginal L1 error.
  auto sweep = [&](double e) {
    for (std::size_t i = 0; i < n1; ++i) {
      if (a[i] == 0.0) {
        f[i] = -std::numeric_limits<double>::infinity();
        continue;
      }
      for (std::size_t j = 0; j < n2; ++j) scratch_row[j] = (g[j] - cp(i, j)) / e;
      f[i] = e * (log_a[i] - detail::log_sum_exp(scratch_row));
      if (!std::isfinite(f[i])) throw underflow(it);
    }
    for (std::size_t j = 0; j < n2; ++j) {
      if (b[j] == 0.0) {
        g[j] = -std::numeric_limits<double>::infinity();
        continue;
      }
      for (std::size_t i = 0; i < n1; ++i) scratch_col[i] = (f[i] - cp(i, j)) / e;
      g[j] = e * (log_b[j] - detail::log_sum_exp(scratch_col));
      if (!std::isfinite(g[j])) throw underflow(it);
    }
    // Columns are exact after the g-update; measure the row violation.
    double err = 0.0;
    for (std::size_t i = 0; i < n1; ++i) {
      double r = 0.0;
      if (std::isfinite(f[i]))
        for (std::size_t j = 0; j < n2; ++j)
          if (std::isfinite(g[j])) r += std::exp((f[i] + g[j] - cp(i, j)) / e);
      if (r == 0.0 && a[i] > 0.0) throw underflow(it);
      err += std::abs(r - a[i]);
    }
    if (!std::isfinite(err)) throw underflow(it);
    return err;
  };

  // Anneal from the cost scale down to eps, warm-starting the potentials;
  // the fixed point is that of the final eps, only reached in fewer sweeps.
  for (double e = cmax; e > 2.0 * eps && it < config.max_iterations; e *= 0.5)
    for (int k = 0; k < 20 && it < config.max_iterations; ++k, ++it)
      if (sweep(e) < 1e-3) break;

  double err = std::numeric_limits<double>::infinity();
  for (; it < config.max_iterations; ++it) {
    err = sweep(eps);
    if (err < config.convergence_tol) {
      ++it;
      break;
    }
  }
  if (err >= config.convergence_tol)
    throw NumericalError("ot_core", "Sinkhorn did not converge in " + std::to_string(config.max_iterations) +
                                        " iterations (row marginal L1 error " + num(err) +
                                        "); raise epsilon, convergence_tol or max_iterations");

  Matrix plan(n1, n2);
  for (std::size_t i = 0; i < n1; ++i)
    for (std::size_t j = 0; j < n2; ++j)
      plan(i, j) = (std::isfinite(f[i]) && std::isfinite(g[j])) ? std::exp((f[i] + g[j] - cp(i, j)) / eps)
                                                                : 0.0;
  const double obj = detail::transport_cost(plan, cp);
  const SolverStats stats{SolverMethod::entropic, it, detail::marginal_error(plan, a, b)};
  return Coupling(std::move(plan), a, b, obj, stats);
}

inline Coupling solve(const DiscreteMeasure& m1, const DiscreteMeasure& m2, const CostMatrix& c,
                      const SolverConfig& config = {}) {
  config.validate();
  if (config.method == SolverMethod::entropic) return solve_entropic(m1, m2, c, config);
  return solve_exact(m1, m2, c, config.max_iterations);
}

inline double wasserstein_from_objective(double objective, double order) {
  objective = std::max(0.0, objective);
  return order == 2.0 ? std::sqrt(objective) : std::pow(objective, 1.0 / order);
}

/// W_p = (min <pi, C^p>)^(1/p), using the exact solver.
inline double wasserstein(const DiscreteMeasure& m1, const DiscreteMeasure& m2, const CostMatrix& c) {
  return wasserstein_from_objective(solve_exact(m1, m2, c).objective(), c.order());
}

/// Row i of the plan divided by its row sum: where source point i sends its
/// mass, as a probability vector over targets.
inline std::vector<double> row_conditional(const Coupling& pi, std::size_t i) {
  if (i >= pi.rows()) throw InputError("ot_core", "row index out of range");
  const double s = pi.row_sum(i);
  if (!(s > 0.0))
    throw InputError("ot_core", "source point " + std::to_string(i) + " carries no mass");
  auto r = pi.row(i);
  std::vector<double> out(r.begin(), r.end());
  for (double& x : out) x /= s;
  return out;
}

}  // namespace otfair
