#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "otfair/error.hpp"

namespace otfair {

enum class FeatureRole { actionable, non_actionable, immutable };

inline const char* to_string(FeatureRole r) {
  switch (r) {
    case FeatureRole::actionable: return "actionable";
    case FeatureRole::non_actionable: return "non_actionable";
    case FeatureRole::immutable: return "immutable";
  }
  return "?";
}

inline FeatureRole parse_role(std::string_view s) {
  if (s == "actionable") return FeatureRole::actionable;
  if (s == "non_actionable" || s == "non-actionable") return FeatureRole::non_actionable;
  if (s == "immutable") return FeatureRole::immutable;
  throw InputError("ingest", "unknown feature role '" + std::string(s) + "'");
}

/// One raw feature and the encoded columns it occupies (a single column for
/// numerics, a one-hot block for categoricals).
struct FeatureBlock {
  std::string name;
  std::vector<std::size_t> columns;
  bool categorical = false;
  FeatureRole role = FeatureRole::immutable;
};

/// Per-encoded-column roles from raw feature blocks.
inline std::vector<FeatureRole> column_roles(const std::vector<FeatureBlock>& blocks, std::size_t columns) {
  std::vector<FeatureRole> roles(columns, FeatureRole::immutable);
  std::vector<bool> seen(columns, false);
  for (const auto& b : blocks)
    for (std::size_t c : b.columns) {
      if (c >= columns || seen[c]) throw InputError("recourse", "feature blocks do not tile the encoded columns");
      seen[c] = true;
      roles[c] = b.role;
    }
  for (std::size_t c = 0; c < columns; ++c)
    if (!seen[c]) throw InputError("recourse", "encoded column " + std::to_string(c) + " has no role");
  return roles;
}

inline std::vector<std::size_t> actionable_columns(const std::vector<FeatureRole>& roles) {
  std::vector<std::size_t> out;
  for (std::size_t c = 0; c < roles.size(); ++c)
    if (roles[c] == FeatureRole::actionable) out.push_back(c);
  return out;
}

}  // namespace otfair
