#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "otfair/csv.hpp"
#include "otfair/error.hpp"
#include "otfair/features.hpp"
#include "otfair/matrix.hpp"
#include "otfair/partition.hpp"

namespace otfair {

enum class ColumnKind { numeric, categorical };

struct ColumnSpec {
  std::string name;
  ColumnKind kind = ColumnKind::numeric;
  /// Unset only for the label column.
  std::optional<FeatureRole> role;
  bool is_group = false;
  bool is_label = false;
  /// Encoded but left out of policy training.
  bool exclude_from_policy = false;
};

struct Schema {
  std::vector<ColumnSpec> columns;
  std::string label_positive_value = "1";

  const ColumnSpec* find(std::string_view name) const {
    for (const auto& c : columns)
      if (c.name == name) return &c;
    return nullptr;
  }

  const ColumnSpec* label() const {
    for (const auto& c : columns)
      if (c.is_label) return &c;
    return nullptr;
  }
};

inline Schema parse_schema(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("columns") || !j["columns"].is_array())
    throw InputError("ingest", "schema must be an object with a 'columns' array");
  Schema s;
  std::set<std::string> seen;
  int labels = 0;
  for (const auto& c : j["columns"]) {
    ColumnSpec spec;
    try {
      spec.name = c.at("name").get<std::string>();
      const auto kind = c.value("kind", std::string("numeric"));
      if (kind == "numeric")
        spec.kind = ColumnKind::numeric;
      else if (kind == "categorical")
        spec.kind = ColumnKind::categorical;
      else
        throw InputError("ingest", "column '" + spec.name + "': kind must be numeric or categorical, got '" +
                                       kind + "'");
      spec.is_group = c.value("is_group", false);
      spec.is_label = c.value("is_label", false);
      spec.exclude_from_policy = c.value("exclude_from_policy", false);
      if (c.contains("role")) spec.role = parse_role(c["role"].get<std::string>());
    } catch (const nlohmann::json::exception& e) {
      throw InputError("ingest", std::string("malformed schema column: ") + e.what());
    }
    if (!seen.insert(spec.name).second) throw InputError("ingest", "duplicate schema column '" + spec.name + "'");
    if (spec.is_label) {
      ++labels;
    } else if (!spec.role) {
      throw InputError("ingest", "column '" + spec.name + "' has no role");
    }
    s.columns.push_back(std::move(spec));
  }
  if (labels > 1) throw InputError("ingest", "schema marks more than one label column");
  if (s.columns.size() == static_cast<std::size_t>(labels)) throw InputError("ingest", "schema has no feature columns");
  if (j.contains("label_positive_value")) {
    const auto& v = j["label_positive_value"];
    s.label_positive_value = v.is_string() ? v.get<std::string>() : v.dump();
  }
  return s;
}

inline Schema load_schema(const std::filesystem::path& path) {
  try {
    return parse_schema(nlohmann::json::parse(read_text_file(path)));
  } catch (const nlohmann::json::parse_error& e) {
    throw InputError("ingest", path.string() + ": " + e.what());
  }
}

inline std::optional<double> parse_number(std::string_view s) {
  while (!s.empty() && s.front() == ' ') s.remove_prefix(1);
  while (!s.empty() && s.back() == ' ') s.remove_suffix(1);
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  double v = 0.0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size() || s.empty() || !std::isfinite(v)) return std::nullopt;
  return v;
}

/// Schema columns pulled out of a CSV file, typed and checked.
struct RawTable {
  std::vector<ColumnSpec> columns;
  /// cells[r][c] in schema column order.
  std::vector<std::vector<std::string>> cells;
  /// Parsed value for numeric columns, NaN for categorical.
  std::vector<std::vector<double>> numbers;
  std::vector<std::size_t> lines;
  std::string source;

  std::size_t rows() const noexcept { return cells.size(); }

  std::size_t column_index(std::string_view name) const {
    for (std::size_t c = 0; c < columns.size(); ++c)
      if (columns[c].name == name) return c;
    throw InputError("ingest", "unknown column '" + std::string(name) + "' in " + source);
  }
};

inline bool is_missing(std::string_view cell) {
  while (!cell.empty() && cell.front() == ' ') cell.remove_prefix(1);
  while (!cell.empty() && cell.back() == ' ') cell.remove_suffix(1);
  return cell.empty() || cell == "NA" || cell == "?" || cell == "NaN" || cell == "nan";
}

inline RawTable to_raw_table(const CsvTable& csv, const Schema& schema, const std::string& source) {
  RawTable t;
  t.columns = schema.columns;
  t.source = source;
  std::vector<std::size_t> pos;
  for (const auto& spec : schema.columns) {
    auto it = std::find(csv.header.begin(), csv.header.end(), spec.name);
    if (it == csv.header.end())
      throw InputError("ingest", "schema column '" + spec.name + "' is not in the header of " + source);
    pos.push_back(static_cast<std::size_t>(it - csv.header.begin()));
  }
  std::vector<std::size_t> missing;
  for (std::size_t r = 0; r < csv.rows.size(); ++r) {
    std::vector<std::string> row;
    std::vector<double> nums;
    bool ok = true;
    for (std::size_t c = 0; c < pos.size(); ++c) {
      const std::string& cell = csv.rows[r][pos[c]];
      if (is_missing(cell)) {
        ok = false;
        break;
      }
      if (schema.columns[c].kind == ColumnKind::numeric && !schema.columns[c].is_label) {
        auto v = parse_number(cell);
        if (!v)
          throw InputError("ingest", source + ":" + std::to_string(csv.lines[r]) + ": column '" +
                                         schema.columns[c].name + "': cannot parse '" + cell + "' as a number");
        nums.push_back(*v);
      } else {
        nums.push_back(std::nan(""));
      }
      row.push_back(cell);
    }
    if (!ok) {
      missing.push_back(csv.lines[r]);
      continue;
    }
    t.cells.push_back(std::move(row));
    t.numbers.push_back(std::move(nums));
    t.lines.push_back(csv.lines[r]);
  }
  if (!missing.empty()) {
    std::string list;
    for (std::size_t k = 0; k < missing.size() && k < 20; ++k) list += (k ? ", " : "") + std::to_string(missing[k]);
    if (missing.size() > 20) list += ", ...";
    throw InputError("ingest", source + ": " + std::to_string(missing.size()) +
                                   " row(s) with missing values on lines " + list);
  }
  if (t.cells.empty()) throw InputError("ingest", source + " has no data rows");
  return t;
}

inline RawTable read_table(const std::filesystem::path& path, const Schema& schema) {
  return to_raw_table(read_csv(path), schema, path.string());
}

/// Rows whose `column` cell equals `value`, in order.
inline RawTable filter_rows(const RawTable& t, std::string_view column, std::string_view value) {
  const std::size_t c = t.column_index(column);
  RawTable out;
  out.columns = t.columns;
  out.source = t.source + "[" + std::string(column) + "=" + std::string(value) + "]";
  for (std::size_t r = 0; r < t.rows(); ++r) {
    if (t.cells[r][c] != value) continue;
    out.cells.push_back(t.cells[r]);
    out.numbers.push_back(t.numbers[r]);
    out.lines.push_back(t.lines[r]);
  }
  if (out.cells.empty()) throw InputError("ingest", "filter " + out.source + " selects no rows");
  return out;
}

/// Raw feature -> encoded column span, with category order and z-score
/// parameters.
struct EncodedFeature {
  std::string name;
  ColumnKind kind = ColumnKind::numeric;
  FeatureRole role = FeatureRole::immutable;
  bool exclude_from_policy = false;
  std::size_t offset = 0;
  std::size_t width = 1;
  std::vector<std::string> categories;
  double mean = 0.0;
  double std = 1.0;
  bool constant = false;
};

inline std::string fnv1a_hex(std::string_view bytes) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  static const char* digits = "0123456789abcdef";
  std::string out(16, '0');
  for (int k = 15; k >= 0; --k, h >>= 4) out[static_cast<std::size_t>(k)] = digits[h & 0xF];
  return out;
}

class Encoder {
 public:
  /// Fits category sets and z-score parameters on the union of `tables`.
  static Encoder fit(const Schema& schema, const std::vector<const RawTable*>& tables) {
    if (tables.empty()) throw InputError("ingest", "no tables to fit the encoder on");
    Encoder e;
    std::size_t offset = 0;
    for (std::size_t c = 0; c < schema.columns.size(); ++c) {
      const auto& spec = schema.columns[c];
      if (spec.is_label) continue;
      EncodedFeature f;
      f.name = spec.name;
      f.kind = spec.kind;
      f.role = *spec.role;
      f.exclude_from_policy = spec.exclude_from_policy;
      f.offset = offset;
      if (spec.kind == ColumnKind::categorical) {
        std::set<std::string> cats;
        for (const auto* t : tables)
          for (const auto& row : t->cells) cats.insert(row[c]);
        f.categories.assign(cats.begin(), cats.end());
        f.width = f.categories.size();
        for (const auto& cat : f.categories) e.names_.push_back(f.name + "=" + cat);
      } else {
        double n = 0.0, sum = 0.0;
        for (const auto* t : tables)
          for (const auto& row : t->numbers) {
            sum += row[c];
            n += 1.0;
          }
        f.mean = sum / n;
        double ss = 0.0;
        for (const auto* t : tables)
          for (const auto& row : t->numbers) ss += (row[c] - f.mean) * (row[c] - f.mean);
        f.std = std::sqrt(ss / n);
        if (!(f.std > 1e-12 * std::max(1.0, std::abs(f.mean)))) {
          f.constant = true;
          f.std = 1.0;
          e.warnings_.push_back("column '" + f.name + "' is constant; encoded as zeros");
        }
        e.names_.push_back(f.name);
      }
      offset += f.width;
      e.source_column_.push_back(c);
      e.features_.push_back(std::move(f));
    }
    return e;
  }

  std::size_t width() const noexcept { return names_.size(); }
  const std::vector<EncodedFeature>& features() const noexcept { return features_; }
  const std::vector<std::string>& column_names() const noexcept { return names_; }
  const std::vector<std::string>& warnings() const noexcept { return warnings_; }

  Matrix encode(const RawTable& t) const {
    Matrix m(t.rows(), width());
    for (std::size_t k = 0; k < features_.size(); ++k) {
      const auto& f = features_[k];
      const std::size_t c = source_column_[k];
      for (std::size_t r = 0; r < t.rows(); ++r) {
        if (f.kind == ColumnKind::numeric) {
          m(r, f.offset) = f.constant ? 0.0 : (t.numbers[r][c] - f.mean) / f.std;
          continue;
        }
        auto it = std::lower_bound(f.categories.begin(), f.categories.end(), t.cells[r][c]);
        if (it == f.categories.end() || *it != t.cells[r][c])
          throw InputError("ingest", t.source + ":" + std::to_string(t.lines[r]) + ": column '" + f.name +
                                         "': category '" + t.cells[r][c] + "' was not seen when fitting");
        m(r, f.offset + static_cast<std::size_t>(it - f.categories.begin())) = 1.0;
      }
    }
    return m;
  }

  std::vector<FeatureBlock> blocks() const {
    std::vector<FeatureBlock> out;
    for (const auto& f : features_) {
      FeatureBlock b{f.name, {}, f.kind == ColumnKind::categorical, f.role};
      for (std::size_t k = 0; k < f.width; ++k) b.columns.push_back(f.offset + k);
      out.push_back(std::move(b));
    }
    return out;
  }

  std::vector<FeatureRole> roles() const { return column_roles(blocks(), width()); }

  /// Encoded columns a policy is trained on.
  std::vector<std::size_t> policy_columns() const {
    std::vector<std::size_t> out;
    for (const auto& f : features_)
      if (!f.exclude_from_policy)
        for (std::size_t k = 0; k < f.width; ++k) out.push_back(f.offset + k);
    return out;
  }

  /// Stable hash of the encoding (names, categories, z-score parameters).
  std::string fingerprint() const {
    std::string canon;
    char buf[64];
    for (const auto& f : features_) {
      canon += f.name;
      canon += f.kind == ColumnKind::numeric ? "|n|" : "|c|";
      for (const auto& c : f.categories) canon += c + "\x1f";
      auto r1 = std::to_chars(buf, buf + sizeof buf, f.mean);
      canon.append(buf, r1.ptr);
      canon += '|';
      auto r2 = std::to_chars(buf, buf + sizeof buf, f.std);
      canon.append(buf, r2.ptr);
      canon += f.constant ? "|k\x1e" : "|\x1e";
    }
    return fnv1a_hex(canon);
  }

 private:
  std::vector<EncodedFeature> features_;
  std::vector<std::size_t> source_column_;
  std::vector<std::string> names_;
  std::vector<std::string> warnings_;
};

struct Dataset {
  RawTable raw;
  Encoder encoder;
  Matrix encoded;
  /// 0/1 per row when the schema has a label column.
  std::vector<int> labels;

  std::size_t rows() const noexcept { return encoded.rows(); }
  bool has_labels() const noexcept { return !labels.empty(); }

  /// Encoded matrix restricted to the policy's training columns.
  Matrix policy_features() const {
    const auto cols = encoder.policy_columns();
    Matrix m(rows(), cols.size());
    for (std::size_t r = 0; r < rows(); ++r)
      for (std::size_t k = 0; k < cols.size(); ++k) m(r, k) = encoded(r, cols[k]);
    return m;
  }

  std::vector<std::string> policy_column_names() const {
    std::vector<std::string> out;
    for (std::size_t c : encoder.policy_columns()) out.push_back(encoder.column_names()[c]);
    return out;
  }
};

inline std::vector<int> extract_labels(const RawTable& t, const std::string& positive) {
  std::vector<int> y;
  for (std::size_t c = 0; c < t.columns.size(); ++c) {
    if (!t.columns[c].is_label) continue;
    const auto pos_num = parse_number(positive);
    for (const auto& row : t.cells) {
      bool hit = row[c] == positive;
      if (!hit && pos_num) {
        auto v = parse_number(row[c]);
        hit = v && *v == *pos_num;
      }
      y.push_back(hit ? 1 : 0);
    }
  }
  return y;
}

inline Dataset encode_dataset(RawTable raw, const Encoder& enc, const Schema& schema) {
  Dataset d;
  d.encoded = enc.encode(raw);
  d.labels = extract_labels(raw, schema.label_positive_value);
  d.raw = std::move(raw);
  d.encoder = enc;
  return d;
}

/// Reads, encodes and z-scores one file against its own statistics.
inline Dataset load_csv(const std::filesystem::path& path, const Schema& schema) {
  auto raw = read_table(path, schema);
  auto enc = Encoder::fit(schema, {&raw});
  return encode_dataset(std::move(raw), enc, schema);
}

// ---------------------------------------------------------------------------
// Partitions

/// One grouping axis: a categorical (or numeric by exact value) column, or
/// a numeric column cut into half-open bins [lo, hi).
struct GroupingSpec {
  std::string column;
  std::vector<std::pair<double, double>> bins;
};

namespace detail {

inline std::string format_bound(double v) {
  char buf[32];
  auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

/// Per-row labels along one axis, plus the label order.
inline std::pair<std::vector<std::string>, std::vector<std::string>> axis_labels(const RawTable& t,
                                                                                 const GroupingSpec& g) {
  const std::size_t c = t.column_index(g.column);
  std::vector<std::string> row_labels(t.rows());
  std::vector<std::string> order;
  if (g.bins.empty()) {
    std::set<std::string> vals;
    for (std::size_t r = 0; r < t.rows(); ++r) {
      row_labels[r] = g.column + "=" + t.cells[r][c];
      vals.insert(row_labels[r]);
    }
    order.assign(vals.begin(), vals.end());
    return {row_labels, order};
  }
  if (t.columns[c].kind != ColumnKind::numeric || t.columns[c].is_label)
    throw InputError("ingest", "bins given for non-numeric column '" + g.column + "'");
  auto bins = g.bins;
  for (const auto& [lo, hi] : bins)
    if (!(lo < hi)) throw InputError("ingest", "empty bin [" + format_bound(lo) + "," + format_bound(hi) + ")");
  std::sort(bins.begin(), bins.end());
  for (std::size_t k = 1; k < bins.size(); ++k)
    if (bins[k].first < bins[k - 1].second)
      throw InputError("ingest", "bins on '" + g.column + "' overlap at " + format_bound(bins[k].first));
  for (const auto& [lo, hi] : bins) order.push_back(g.column + "[" + format_bound(lo) + "," + format_bound(hi) + ")");
  for (std::size_t r = 0; r < t.rows(); ++r) {
    const double v = t.numbers[r][c];
    auto it = std::find_if(bins.begin(), bins.end(), [&](const auto& b) { return v >= b.first && v < b.second; });
    if (it == bins.end())
      throw InputError("ingest", t.source + ":" + std::to_string(t.lines[r]) + ": value " + format_bound(v) +
                                     " of '" + g.column + "' falls outside every bin");
    row_labels[r] = order[static_cast<std::size_t>(it - bins.begin())];
  }
  return {row_labels, order};
}

}  // namespace detail

/// Disjoint covering groups from the cross of the given axes. Groups that
/// receive no rows are dropped; names join axis labels with " & ".
inline Partition partition_by(const RawTable& t, const std::vector<GroupingSpec>& axes) {
  if (axes.empty()) return single_group(t.rows());
  std::vector<std::vector<std::string>> row_labels;
  std::vector<std::vector<std::string>> orders;
  for (const auto& g : axes) {
    auto [rl, ord] = detail::axis_labels(t, g);
    row_labels.push_back(std::move(rl));
    orders.push_back(std::move(ord));
  }
  // Enumerate the cross product in axis-major order.
  std::vector<std::string> names{""};
  for (const auto& ord : orders) {
    std::vector<std::string> next;
    for (const auto& prefix : names)
      for (const auto& l : ord) next.push_back(prefix.empty() ? l : prefix + " & " + l);
    names = std::move(next);
  }
  std::map<std::string, std::size_t> slot;
  for (std::size_t k = 0; k < names.size(); ++k) slot[names[k]] = k;
  std::vector<std::vector<std::size_t>> groups(names.size());
  for (std::size_t r = 0; r < t.rows(); ++r) {
    std::string key;
    for (std::size_t a = 0; a < axes.size(); ++a) key += (a ? " & " : "") + row_labels[a][r];
    groups[slot.at(key)].push_back(r);
  }
  Partition p;
  for (std::size_t k = 0; k < names.size(); ++k)
    if (!groups[k].empty()) p.add(names[k], std::move(groups[k]));
  return p;
}

inline Partition partition_by(const Dataset& d, const std::vector<GroupingSpec>& axes) {
  return partition_by(d.raw, axes);
}

/// Seeded shuffle of 0..n-1 cut at round(fraction * n).
inline std::pair<std::vector<std::size_t>, std::vector<std::size_t>> split(std::size_t n, double fraction,
                                                                           std::uint64_t seed) {
  if (!(fraction > 0.0 && fraction < 1.0)) throw InputError("ingest", "split fraction must lie in (0, 1)");
  const auto cut = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(n)));
  if (cut == 0 || cut == n)
    throw InputError("ingest", "split of " + std::to_string(n) + " rows at " + num(fraction) +
                                   " leaves one side empty");
  std::vector<std::size_t> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = i;
  std::mt19937_64 rng(seed);
  std::shuffle(idx.begin(), idx.end(), rng);
  return {std::vector<std::size_t>(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(cut)),
          std::vector<std::size_t>(idx.begin() + static_cast<std::ptrdiff_t>(cut), idx.end())};
}

inline std::pair<std::vector<std::size_t>, std::vector<std::size_t>> split(const Dataset& d, double fraction,
                                                                           std::uint64_t seed) {
  return split(d.rows(), fraction, seed);
}

}  // namespace otfair
