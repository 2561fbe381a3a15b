#pragma once

#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "otfair/bias.hpp"
#include "otfair/csv.hpp"
#include "otfair/error.hpp"
#include "otfair/matrix.hpp"
#include "otfair/measure.hpp"
#include "otfair/parity.hpp"
#include "otfair/policy.hpp"
#include "otfair/recourse.hpp"

namespace otfair {

using ordered_json = nlohmann::ordered_json;

/// Shortest round-trip decimal form; "inf", "-inf" or "nan" otherwise.
inline std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

/// JSON has no infinities; they become null.
inline ordered_json json_number(double v) { return std::isfinite(v) ? ordered_json(v) : ordered_json(nullptr); }

inline void write_text(const std::filesystem::path& path, const std::string& body) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("audit_cli", "cannot write " + path.string());
  out << body;
  if (!out) throw InputError("audit_cli", "write failed for " + path.string());
}

inline void write_json(const std::filesystem::path& path, const ordered_json& j) { write_text(path, j.dump(2) + "\n"); }

// Policy ----------------------------------------------------------------------

inline ordered_json to_json(const Policy& p) {
  ordered_json j;
  j["class_labels"] = p.class_labels;
  j["weights"] = p.weights;
  j["intercept"] = p.intercept;
  j["encoder_fingerprint"] = p.encoder_fingerprint;
  j["feature_columns"] = p.feature_columns;
  return j;
}

inline Policy policy_from_json(const nlohmann::json& j) {
  Policy p;
  try {
    p.weights = j.at("weights").get<std::vector<double>>();
    p.intercept = j.at("intercept").get<double>();
    if (j.contains("class_labels")) p.class_labels = j["class_labels"].get<std::vector<std::string>>();
    if (j.contains("encoder_fingerprint")) p.encoder_fingerprint = j["encoder_fingerprint"].get<std::string>();
    if (j.contains("feature_columns")) p.feature_columns = j["feature_columns"].get<std::vector<std::string>>();
  } catch (const nlohmann::json::exception& e) {
    throw InputError("policy", std::string("malformed policy document: ") + e.what());
  }
  if (p.class_labels.size() != 2) throw InputError("policy", "only binary policies are supported");
  if (!p.feature_columns.empty() && p.feature_columns.size() != p.weights.size())
    throw InputError("policy", "feature_columns and weights differ in length");
  for (double w : p.weights)
    if (!std::isfinite(w)) throw InputError("policy", "non-finite policy weight");
  if (!std::isfinite(p.intercept)) throw InputError("policy", "non-finite policy intercept");
  return p;
}

inline Policy load_policy(const std::filesystem::path& path) {
  try {
    return policy_from_json(nlohmann::json::parse(read_text_file(path, "policy")));
  } catch (const nlohmann::json::parse_error& e) {
    throw InputError("policy", path.string() + ": " + e.what());
  }
}

inline void save_policy(const std::filesystem::path& path, const Policy& p) { write_json(path, to_json(p)); }

// Parity ----------------------------------------------------------------------

inline ordered_json to_json(const DisparateImpact& di) {
  ordered_json j;
  j["ratio"] = json_number(di.ratio);
  j["convention"] = DisparateImpact::convention;
  j["rate_group_0"] = di.rate_a;
  j["rate_group_1"] = di.rate_b;
  j["admits_disparate_impact"] = di.admits_disparate_impact;
  j["degenerate"] = di.degenerate;
  j["infinite"] = di.infinite;
  return j;
}

inline ordered_json to_json(const ParityReport& r) {
  ordered_json j;
  j["disparate_impact"] = to_json(r.disparate_impact);
  j["ddp"] = r.ddp;
  j["equal_opportunity_gap"] = json_number(r.equal_opportunity_gap);
  ordered_json rates = ordered_json::array();
  for (int g : {0, 1}) {
    ordered_json e;
    e["group"] = g;
    e["count"] = r.group_rates[g].count;
    e["positive_rate"] = r.group_rates[g].positive_rate;
    e["true_positive_rate"] = json_number(r.group_rates[g].true_positive_rate);
    rates.push_back(e);
  }
  j["group_rates"] = rates;
  return j;
}

// Matrices and couplings ---------------------------------------------------------

/// Header row "group" + column names, then one named row per matrix row.
inline std::string matrix_csv(const Matrix& m, const std::vector<std::string>& row_names,
                              const std::vector<std::string>& col_names, const std::string& corner = "group") {
  std::ostringstream os;
  std::vector<std::string> head{corner};
  head.insert(head.end(), col_names.begin(), col_names.end());
  write_csv_row(os, head);
  for (std::size_t i = 0; i < m.rows(); ++i) {
    std::vector<std::string> row{row_names[i]};
    for (std::size_t j = 0; j < m.cols(); ++j) row.push_back(format_number(m(i, j)));
    write_csv_row(os, row);
  }
  return os.str();
}

inline ordered_json matrix_json(const Matrix& m) {
  ordered_json rows = ordered_json::array();
  for (std::size_t i = 0; i < m.rows(); ++i) {
    auto r = m.row(i);
    rows.push_back(std::vector<double>(r.begin(), r.end()));
  }
  return rows;
}

/// Sparse (i, j, mass) listing of entries above `threshold`.
inline std::string coupling_csv(const Coupling& pi, double threshold) {
  std::ostringstream os;
  os << "i,j,mass\n";
  for (std::size_t i = 0; i < pi.rows(); ++i) {
    auto r = pi.row(i);
    for (std::size_t j = 0; j < r.size(); ++j)
      if (r[j] > threshold) os << i << ',' << j << ',' << format_number(r[j]) << '\n';
  }
  return os.str();
}

inline const char* to_string(SolverMethod m) { return m == SolverMethod::exact ? "exact" : "entropic"; }

inline ordered_json to_json(const SolverStats& s) {
  ordered_json j;
  j["method"] = to_string(s.method);
  j["iterations"] = s.iterations;
  j["marginal_error"] = s.marginal_error;
  return j;
}

// Bias ----------------------------------------------------------------------

inline ordered_json to_json(const BiasReport& r) {
  ordered_json j;
  j["convention"] = to_string(r.convention);
  j["groups_a"] = r.groups_a;
  j["groups_b"] = r.groups_b;
  j["group_bias"] = r.group_bias;
  j["total_bias"] = r.total_bias();
  j["decomposition"] = matrix_json(r.decomposition);
  j["mass_shares"] = matrix_json(r.mass_shares);
  return j;
}

/// id, group, bias, normalized, degenerate per source individual.
inline std::string individual_bias_csv(const BiasReport& r, const std::vector<std::string>& group_of) {
  std::ostringstream os;
  os << "individual_id,group,bias,normalized_bias,normalized_degenerate\n";
  for (std::size_t i = 0; i < r.individual_bias.size(); ++i) {
    write_csv_row(os, {std::to_string(i), group_of[i], format_number(r.individual_bias[i]),
                       format_number(r.normalized_individual_bias[i]), r.normalized_degenerate[i] ? "1" : "0"});
  }
  return os.str();
}

// Recourse --------------------------------------------------------------------

inline ordered_json to_json(const RecourseResult& r, const std::vector<std::string>& column_names) {
  ordered_json j;
  j["alpha"] = r.alpha;
  double mean = 0.0;
  for (double p : r.good_label_probability) mean += p;
  j["mean_good_label_probability"] = mean / static_cast<double>(r.good_label_probability.size());
  j["reclassified_fraction"] = r.reclassified_fraction;
  ordered_json deltas = ordered_json::object();
  for (std::size_t c = 0; c < r.actionable_columns.size(); ++c)
    deltas[column_names[r.actionable_columns[c]]] = r.feature_deltas[c];
  j["feature_deltas"] = deltas;
  return j;
}

/// Long format: alpha, individual_id, probability.
inline std::string recourse_long_csv(const std::vector<RecourseResult>& results) {
  std::ostringstream os;
  os << "alpha,individual_id,probability\n";
  for (const auto& r : results)
    for (std::size_t k = 0; k < r.individual_ids.size(); ++k)
      os << format_number(r.alpha) << ',' << r.individual_ids[k] << ',' << format_number(r.good_label_probability[k])
         << '\n';
  return os.str();
}

/// alpha, individual_id, then every encoded column after interpolation.
inline std::string recourse_features_csv(const std::vector<RecourseResult>& results,
                                         const std::vector<std::string>& column_names) {
  std::ostringstream os;
  std::vector<std::string> head{"alpha", "individual_id"};
  head.insert(head.end(), column_names.begin(), column_names.end());
  write_csv_row(os, head);
  for (const auto& r : results)
    for (std::size_t k = 0; k < r.individual_ids.size(); ++k) {
      std::vector<std::string> row{format_number(r.alpha), std::to_string(r.individual_ids[k])};
      for (double v : r.new_features.row(k)) row.push_back(format_number(v));
      write_csv_row(os, row);
    }
  return os.str();
}

inline std::string feature_changes_csv(const FeatureChangeSummary& s) {
  std::ostringstream os;
  std::vector<std::string> head{"alpha"};
  for (std::size_t f = 0; f < s.features.size(); ++f)
    head.push_back(s.categorical[f] ? s.features[f] + " (partial)" : s.features[f]);
  write_csv_row(os, head);
  for (std::size_t k = 0; k < s.alphas.size(); ++k) {
    std::vector<std::string> row{format_number(s.alphas[k])};
    for (std::size_t f = 0; f < s.features.size(); ++f) row.push_back(format_number(s.changes(k, f)));
    write_csv_row(os, row);
  }
  return os.str();
}

}  // namespace otfair
