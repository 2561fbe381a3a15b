#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <string>
#include <vector>

#include "otfair/error.hpp"
#include "otfair/matrix.hpp"

namespace otfair::detail {

// Primal network simplex for the transportation problem on the complete
// bipartite graph  sources -> sinks, uncapacitated arcs, balanced supplies.
//
// The spanning-tree basis starts from artificial arcs to an extra root node
// (one per node, big-M cost on demand-side arcs). Entering arcs come from a
// block search over the real arcs; the leaving arc follows Cunningham's
// rule (last blocking arc along the cycle orientation), which keeps the
// tree strongly feasible and rules out cycling on degenerate instances.
// After each pivot the tree order and node potentials are rebuilt by a DFS
// from the root; this is O(nodes) per pivot and avoids accumulated drift in
// the potentials.
class TransportNetworkSimplex {
 public:
  struct Result {
    Matrix flow;
    long pivots = 0;
    bool converged = false;
    double artificial_residual = 0.0;
  };

  TransportNetworkSimplex(const std::vector<double>& supply, const std::vector<double>& demand,
                          const Matrix& cost)
      : n1_(supply.size()), n2_(demand.size()), cost_(cost) {
    const std::size_t nodes = n1_ + n2_;
    root_ = nodes;
    real_arcs_ = n1_ * n2_;
    const std::size_t all_arcs = real_arcs_ + nodes;

    double max_cost = 0.0;
    for (double c : cost.data()) max_cost = std::max(max_cost, std::abs(c));
    art_cost_ = (max_cost + 1.0) * static_cast<double>(nodes + 1);
    // Reduced costs above -eps are treated as nonnegative. Bounds the
    // optimality gap by eps * total mass.
    eps_ = 1e-13 * std::max(1.0, max_cost);

    flow_.assign(all_arcs, 0.0);
    in_tree_.assign(all_arcs, 0);
    art_source_.assign(nodes, 0);
    art_target_.assign(nodes, 0);
    art_cost_of_.assign(nodes, 0.0);

    parent_.assign(nodes + 1, kNone);
    pred_.assign(nodes + 1, kNone);
    dir_.assign(nodes + 1, 0);
    depth_.assign(nodes + 1, 0);
    pi_.assign(nodes + 1, 0.0);

    for (std::size_t u = 0; u < nodes; ++u) {
      const double s = u < n1_ ? supply[u] : -demand[u - n1_];
      const std::size_t e = real_arcs_ + u;
      parent_[u] = root_;
      pred_[u] = e;
      in_tree_[e] = 1;
      if (s >= 0.0) {
        dir_[u] = kUp;
        art_source_[u] = u;
        art_target_[u] = root_;
        art_cost_of_[u] = 0.0;
        flow_[e] = s;
      } else {
        dir_[u] = kDown;
        art_source_[u] = root_;
        art_target_[u] = u;
        art_cost_of_[u] = art_cost_;
        flow_[e] = -s;
      }
    }
    block_size_ = std::max<std::size_t>(
        10, static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(real_arcs_)))));
    rebuild_tree();
  }

  Result run(long max_pivots) {
    Result res;
    while (true) {
      if (!find_entering_arc()) {
        res.converged = true;
        break;
      }
      if (res.pivots >= max_pivots) break;
      pivot();
      ++res.pivots;
    }
    res.flow = Matrix(n1_, n2_);
    auto out = res.flow.data();
    for (std::size_t e = 0; e < real_arcs_; ++e) out[e] = flow_[e];
    for (std::size_t u = 0; u < n1_ + n2_; ++u)
      res.artificial_residual = std::max(res.artificial_residual, flow_[real_arcs_ + u]);
    return res;
  }

 private:
  static constexpr std::size_t kNone = std::numeric_limits<std::size_t>::max();
  static constexpr int kUp = 1;    // tree arc points from node to parent
  static constexpr int kDown = -1; // tree arc points from parent to node

  std::size_t source(std::size_t e) const {
    return e < real_arcs_ ? e / n2_ : art_source_[e - real_arcs_];
  }
  std::size_t target(std::size_t e) const {
    return e < real_arcs_ ? n1_ + e % n2_ : art_target_[e - real_arcs_];
  }
  double arc_cost(std::size_t e) const {
    return e < real_arcs_ ? cost_.data()[e] : art_cost_of_[e - real_arcs_];
  }
  double reduced_cost(std::size_t e) const {
    return arc_cost(e) + pi_[source(e)] - pi_[target(e)];
  }

  bool find_entering_arc() {
    double best = -eps_;
    std::size_t cnt = block_size_;
    std::size_t e = next_arc_;
    bool found = false;
    for (std::size_t scanned = 0; scanned < real_arcs_; ++scanned) {
      if (!in_tree_[e]) {
        const double c = reduced_cost(e);
        if (c < best) {
          best = c;
          in_arc_ = e;
          found = true;
        }
      }
      if (++e == real_arcs_) e = 0;
      if (--cnt == 0) {
        if (found) break;
        cnt = block_size_;
      }
    }
    next_arc_ = e;
    return found;
  }

  void pivot() {
    const std::size_t first = source(in_arc_);
    const std::size_t second = target(in_arc_);

    std::size_t a = first, b = second;
    while (a != b) {
      if (depth_[a] >= depth_[b])
        a = parent_[a];
      else
        b = parent_[b];
    }
    const std::size_t join = a;

    // Flow runs first -> second on the entering arc, then second -> join and
    // join -> first around the cycle.
    double delta = std::numeric_limits<double>::infinity();
    std::size_t u_out = kNone;
    int side = 0;
    for (std::size_t u = first; u != join; u = parent_[u]) {
      if (dir_[u] == kUp && flow_[pred_[u]] < delta) {
        delta = flow_[pred_[u]];
        u_out = u;
        side = 1;
      }
    }
    for (std::size_t u = second; u != join; u = parent_[u]) {
      if (dir_[u] == kDown && flow_[pred_[u]] <= delta) {
        delta = flow_[pred_[u]];
        u_out = u;
        side = 2;
      }
    }
    if (side == 0)
      throw NumericalError("ot_core", "network simplex found an unbounded cycle");

    if (delta > 0.0) {
      flow_[in_arc_] += delta;
      for (std::size_t u = first; u != join; u = parent_[u]) flow_[pred_[u]] -= dir_[u] * delta;
      for (std::size_t u = second; u != join; u = parent_[u]) flow_[pred_[u]] += dir_[u] * delta;
    }
    const std::size_t out_arc = pred_[u_out];
    flow_[out_arc] = 0.0;
    in_tree_[out_arc] = 0;
    in_tree_[in_arc_] = 1;

    // Re-hang the subtree cut off at u_out from the entering arc: reverse
    // the stem u_in -> ... -> u_out.
    const std::size_t u_in = side == 1 ? first : second;
    const std::size_t v_in = side == 1 ? second : first;
    std::size_t node = u_in;
    std::size_t new_parent = v_in;
    std::size_t new_pred = in_arc_;
    int new_dir = (u_in == source(in_arc_)) ? kUp : kDown;
    while (true) {
      const std::size_t old_parent = parent_[node];
      const std::size_t old_pred = pred_[node];
      const int old_dir = dir_[node];
      parent_[node] = new_parent;
      pred_[node] = new_pred;
      dir_[node] = new_dir;
      if (node == u_out) break;
      new_parent = node;
      new_pred = old_pred;
      new_dir = -old_dir;
      node = old_parent;
    }
    rebuild_tree();
  }

  // Depths and potentials from scratch; pi[root] = 0 and every tree arc has
  // zero reduced cost.
  void rebuild_tree() {
    const std::size_t total = root_ + 1;
    child_start_.assign(total + 1, 0);
    for (std::size_t u = 0; u < root_; ++u) ++child_start_[parent_[u] + 1];
    for (std::size_t k = 0; k < total; ++k) child_start_[k + 1] += child_start_[k];
    children_.resize(root_);
    fill_.assign(child_start_.begin(), child_start_.end() - 1);
    for (std::size_t u = 0; u < root_; ++u) children_[fill_[parent_[u]]++] = u;

    stack_.clear();
    stack_.push_back(root_);
    depth_[root_] = 0;
    pi_[root_] = 0.0;
    while (!stack_.empty()) {
      const std::size_t p = stack_.back();
      stack_.pop_back();
      for (std::size_t k = child_start_[p]; k < child_start_[p + 1]; ++k) {
        const std::size_t v = children_[k];
        depth_[v] = depth_[p] + 1;
        const double c = arc_cost(pred_[v]);
        pi_[v] = dir_[v] == kUp ? pi_[p] - c : pi_[p] + c;
        stack_.push_back(v);
      }
    }
  }

  std::size_t n1_, n2_, root_, real_arcs_;
  const Matrix& cost_;
  double art_cost_ = 0.0;
  double eps_ = 0.0;

  std::vector<double> flow_;
  std::vector<char> in_tree_;
  std::vector<std::size_t> art_source_, art_target_;
  std::vector<double> art_cost_of_;

  std::vector<std::size_t> parent_, pred_, depth_;
  std::vector<int> dir_;
  std::vector<double> pi_;

  std::vector<std::size_t> child_start_, children_, fill_, stack_;

  std::size_t block_size_ = 10;
  std::size_t next_arc_ = 0;
  std::size_t in_arc_ = 0;
};

}  // namespace otfair::detail
