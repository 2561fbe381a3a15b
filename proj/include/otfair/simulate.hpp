#pragma once

#include <cmath>
#include <cstdint>
#include <numeric>
#include <random>
#include <vector>

#include "otfair/error.hpp"
#include "otfair/measure.hpp"
#include "otfair/parity.hpp"
#include "otfair/transport.hpp"

namespace otfair {

/// Two schools feeding one college that admits a fraction r of applicants.
/// School A's outcome is the same lottery for every student; school B admits
/// its top-GPA students outright.
struct SimulationSpec {
  double rule = 0.25;
  std::size_t n_a = 400;
  std::size_t n_b = 400;
  int years = 50;
  std::uint64_t seed = 0;

  void validate() const {
    if (!(rule >= 0.0 && rule <= 1.0)) throw InputError("simulate", "rule must lie in [0, 1], got " + num(rule));
    if (n_a < 4 || n_b < 4) throw InputError("simulate", "cohort sizes must be at least 4");
    if (years < 1) throw InputError("simulate", "years must be positive");
  }
};

struct SimulationYear {
  int year = 0;
  std::size_t admits_a = 0;
  std::size_t admits_b = 0;
  DisparateImpact disparate_impact;
  double wasserstein = 0.0;
};

struct SimulationResult {
  SimulationSpec spec;
  std::vector<SimulationYear> years;
  /// sqrt(2 r (1 - r)).
  double closed_form = 0.0;
  /// Mean DI ratio over the years (infinite if any year is).
  double mean_di = 0.0;
};

/// round(r n) to the nearest integer, ties toward the smaller count.
inline std::size_t top_admit_count(double rule, std::size_t n) {
  const double x = rule * static_cast<double>(n);
  const double lo = std::floor(x);
  return static_cast<std::size_t>(x - lo > 0.5 ? lo + 1.0 : lo);
}

inline SimulationResult simulate_admissions(const SimulationSpec& spec) {
  spec.validate();
  const double r = spec.rule;
  SimulationResult res;
  res.spec = spec;
  res.closed_form = std::sqrt(2.0 * r * (1.0 - r));

  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> gpa(3.0, 0.5);
  std::bernoulli_distribution lottery(r);
  const std::size_t k = top_admit_count(r, spec.n_b);

  Matrix school_a(spec.n_a, 2);
  for (std::size_t i = 0; i < spec.n_a; ++i) {
    school_a(i, 0) = 1.0 - r;
    school_a(i, 1) = r;
  }
  const auto m_a = DiscreteMeasure::uniform(school_a);

  double di_sum = 0.0;
  for (int y = 0; y < spec.years; ++y) {
    std::vector<double> g(spec.n_b);
    for (double& v : g) v = gpa(rng);
    std::vector<std::size_t> order(spec.n_b);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t p, std::size_t q) { return g[p] > g[q]; });
    Matrix school_b(spec.n_b, 2);
    std::vector<int> admitted_b(spec.n_b, 0);
    for (std::size_t rank = 0; rank < spec.n_b; ++rank) {
      const std::size_t s = order[rank];
      admitted_b[s] = rank < k;
      school_b(s, 0) = rank < k ? 0.0 : 1.0;
      school_b(s, 1) = rank < k ? 1.0 : 0.0;
    }

    std::vector<int> pred, group;
    pred.reserve(spec.n_a + spec.n_b);
    group.reserve(spec.n_a + spec.n_b);
    SimulationYear yr;
    yr.year = y + 1;
    for (std::size_t i = 0; i < spec.n_a; ++i) {
      const int admit = lottery(rng);
      yr.admits_a += static_cast<std::size_t>(admit);
      pred.push_back(admit);
      group.push_back(0);
    }
    for (int a : admitted_b) {
      pred.push_back(a);
      group.push_back(1);
    }
    yr.admits_b = k;
    yr.disparate_impact = disparate_impact_ratio(pred, group);

    const auto m_b = DiscreteMeasure::uniform(std::move(school_b));
    yr.wasserstein = wasserstein(m_a, m_b, build_cost_matrix(m_a, m_b, 2.0));
    di_sum += yr.disparate_impact.ratio;
    res.years.push_back(yr);
  }
  res.mean_di = di_sum / static_cast<double>(spec.years);
  return res;
}

}  // namespace otfair
