#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "otfair/error.hpp"

namespace otfair {

/// Named disjoint index groups over 0..n-1.
struct Partition {
  std::vector<std::string> names;
  std::vector<std::vector<std::size_t>> groups;

  std::size_t size() const noexcept { return groups.size(); }

  void add(std::string name, std::vector<std::size_t> indices) {
    names.push_back(std::move(name));
    groups.push_back(std::move(indices));
  }
};

inline Partition single_group(std::size_t n, std::string name = "all") {
  Partition p;
  std::vector<std::size_t> all(n);
  for (std::size_t i = 0; i < n; ++i) all[i] = i;
  p.add(std::move(name), std::move(all));
  return p;
}

/// Group index of every element. Throws unless the groups are nonempty,
/// pairwise disjoint and cover 0..n-1.
inline std::vector<std::size_t> group_assignment(const Partition& p, std::size_t n, const std::string& module,
                                                 const std::string& what) {
  if (p.names.size() != p.groups.size()) throw InputError(module, what + ": names and groups differ in count");
  if (p.groups.empty()) throw InputError(module, what + " has no groups");
  constexpr std::size_t unset = static_cast<std::size_t>(-1);
  std::vector<std::size_t> owner(n, unset);
  for (std::size_t g = 0; g < p.groups.size(); ++g) {
    if (p.groups[g].empty()) throw InputError(module, what + " group '" + p.names[g] + "' is empty");
    for (std::size_t i : p.groups[g]) {
      if (i >= n)
        throw InputError(module, what + " group '" + p.names[g] + "' has index " + std::to_string(i) +
                                     " outside 0.." + std::to_string(n - 1));
      if (owner[i] != unset)
        throw InputError(module, what + " groups '" + p.names[owner[i]] + "' and '" + p.names[g] +
                                     "' overlap at index " + std::to_string(i));
      owner[i] = g;
    }
  }
  for (std::size_t i = 0; i < n; ++i)
    if (owner[i] == unset) throw InputError(module, what + " does not cover index " + std::to_string(i));
  return owner;
}

}  // namespace otfair
