#pragma once

#include <cmath>
#include <filesystem>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "otfair/csv.hpp"
#include "otfair/dataset.hpp"
#include "otfair/error.hpp"
#include "otfair/policy.hpp"
#include "otfair/serialize.hpp"
#include "otfair/simulate.hpp"

// Seeded synthetic datasets with schemas and ready-to-run audit configs.

namespace otfair::generate {

namespace fs = std::filesystem;

namespace detail {

struct Col {
  const char* name;
  const char* kind;
  const char* role;  // nullptr for the label
  bool is_group = false;
  bool exclude = false;
};

inline ordered_json schema_json(const std::vector<Col>& cols, const std::string& positive) {
  ordered_json j;
  ordered_json arr = ordered_json::array();
  for (const auto& c : cols) {
    ordered_json e;
    e["name"] = c.name;
    e["kind"] = c.kind;
    if (c.role) {
      e["role"] = c.role;
    } else {
      e["is_label"] = true;
    }
    if (c.is_group) e["is_group"] = true;
    if (c.exclude) e["exclude_from_policy"] = true;
    arr.push_back(e);
  }
  j["columns"] = arr;
  if (!positive.empty()) j["label_positive_value"] = positive;
  return j;
}

inline std::string fixed(double v, int digits = 4) {
  const double s = std::pow(10.0, digits);
  double r = std::round(v * s) / s;
  if (r == 0.0) r = 0.0;  // no "-0"
  return format_number(r);
}

class CsvWriter {
 public:
  explicit CsvWriter(const std::vector<Col>& cols) {
    std::vector<std::string> head;
    for (const auto& c : cols) head.push_back(c.name);
    write_csv_row(os_, head);
  }
  void row(const std::vector<std::string>& cells) { write_csv_row(os_, cells); }
  std::string str() const { return os_.str(); }

 private:
  std::ostringstream os_;
};

template <class Rng>
std::size_t pick(Rng& rng, std::initializer_list<double> weights) {
  std::discrete_distribution<std::size_t> d(weights);
  return d(rng);
}

/// Encoder the audit pipeline will fit on these files.
inline Encoder refit(const fs::path& schema, const std::vector<fs::path>& files) {
  const Schema s = load_schema(schema);
  std::vector<RawTable> tables;
  for (const auto& f : files) tables.push_back(read_table(f, s));
  std::vector<const RawTable*> ptrs;
  for (const auto& t : tables) ptrs.push_back(&t);
  return Encoder::fit(s, ptrs);
}

inline void write_config(const fs::path& dir, const std::string& name, const ordered_json& cfg) {
  write_json(dir / name, cfg);
}

}  // namespace detail

/// German-credit-style table. Creditworthiness is planted in the actionable
/// columns, with smaller contributions from loan terms; sex and age are
/// encoded but left out of the policy.
inline void credit(const fs::path& dir, std::uint64_t seed, std::size_t n = 600) {
  using detail::Col;
  const std::vector<Col> cols{
      {"savings", "categorical", "actionable"},
      {"credit_history", "categorical", "actionable"},
      {"other_installments", "categorical", "actionable"},
      {"guarantor", "categorical", "actionable"},
      {"num_liable", "numeric", "actionable"},
      {"unemployed", "categorical", "actionable"},
      {"property", "categorical", "actionable"},
      {"existing_credits", "numeric", "actionable"},
      {"installment_rate", "numeric", "actionable"},
      {"credit_amount", "numeric", "non_actionable"},
      {"duration", "numeric", "non_actionable"},
      {"purpose", "categorical", "non_actionable"},
      {"telephone", "categorical", "non_actionable"},
      {"sex", "categorical", "immutable", true, true},
      {"age", "numeric", "immutable", true, true},
      {"foreign_worker", "categorical", "immutable"},
      {"years_at_job", "numeric", "immutable"},
      {"skilled", "categorical", "immutable"},
      {"resident_since", "numeric", "immutable"},
      {"credit", "categorical", nullptr},
  };
  const char* savings[] = {"none", "lt100", "100to500", "500to1000", "gt1000"};
  const char* history[] = {"critical", "delayed", "paid", "all_paid"};
  const char* installments[] = {"bank", "stores", "none"};
  const char* guarantor[] = {"none", "co-applicant", "guarantor"};
  const char* property[] = {"none", "car", "life_insurance", "real_estate"};
  const char* purpose[] = {"car", "furniture", "education", "business", "other"};

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> z(0.0, 1.0);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  detail::CsvWriter csv(cols);
  for (std::size_t i = 0; i < n; ++i) {
    const bool female = u(rng) < 0.35;
    const int age = std::clamp(static_cast<int>(std::lround(36.0 + 11.0 * z(rng))), 19, 75);
    const std::size_t sv = detail::pick(rng, {0.35, 0.3, 0.15, 0.1, 0.1});
    const std::size_t hi = detail::pick(rng, {0.25, 0.15, 0.45, 0.15});
    const std::size_t oi = detail::pick(rng, {0.15, 0.1, 0.75});
    const std::size_t gu = detail::pick(rng, {0.85, 0.08, 0.07});
    const int liable = u(rng) < 0.85 ? 1 : 2;
    const bool unemployed = u(rng) < 0.12;
    const std::size_t pr = detail::pick(rng, {0.15, 0.3, 0.25, 0.3});
    const int credits = 1 + static_cast<int>(detail::pick(rng, {0.6, 0.3, 0.07, 0.03}));
    const int rate = 1 + static_cast<int>(detail::pick(rng, {0.15, 0.25, 0.2, 0.4}));
    const double amount = std::round(std::exp(7.9 + 0.7 * z(rng)));
    const int duration = std::clamp(static_cast<int>(std::lround(21.0 + 11.0 * z(rng))), 4, 72);
    const std::size_t pu = detail::pick(rng, {0.3, 0.25, 0.1, 0.15, 0.2});
    const bool phone = u(rng) < 0.4;
    const bool foreign = u(rng) < 0.05;
    const int years = std::clamp(static_cast<int>(std::lround(6.0 + 5.0 * z(rng))), 0, 30);
    const bool skilled = u(rng) < 0.65;
    const int resident = 1 + static_cast<int>(detail::pick(rng, {0.15, 0.3, 0.15, 0.4}));

    const double score = 0.45 * static_cast<double>(sv) + 0.55 * static_cast<double>(hi) +
                         (oi == 2 ? 0.5 : 0.0) + (gu == 2 ? 0.4 : 0.0) - (unemployed ? 0.9 : 0.0) +
                         0.25 * static_cast<double>(pr) - 0.3 * (credits - 1) - 0.3 * (rate - 1) -
                         0.00008 * (amount - 3000.0) - 0.025 * (duration - 21) + (pu == 0 ? 0.2 : 0.0) +
                         0.02 * (years - 6) + (skilled ? 0.2 : 0.0) - 0.4;
    const bool good = u(rng) < sigmoid(score);

    csv.row({savings[sv], history[hi], installments[oi], guarantor[gu], std::to_string(liable),
             unemployed ? "yes" : "no", property[pr], std::to_string(credits), std::to_string(rate),
             format_number(amount), std::to_string(duration), purpose[pu], phone ? "yes" : "no",
             female ? "female" : "male", std::to_string(age), foreign ? "yes" : "no", std::to_string(years),
             skilled ? "yes" : "no", std::to_string(resident), good ? "good" : "bad"});
  }
  write_text(dir / "credit.csv", csv.str());
  write_json(dir / "credit_schema.json", detail::schema_json(cols, "good"));

  ordered_json cfg;
  cfg["seed"] = seed;
  cfg["output_dir"] = "out";
  cfg["population_a"] = {{"data", "credit.csv"},
                         {"schema", "credit_schema.json"},
                         {"filter", {{"column", "credit"}, {"equals", "bad"}}}};
  cfg["population_b"] = {{"data", "credit.csv"},
                         {"schema", "credit_schema.json"},
                         {"filter", {{"column", "credit"}, {"equals", "good"}}}};
  cfg["policy_a"] = {{"source", "train"}, {"l2", 1e-4}, {"train_fraction", 0.8}};
  cfg["solver"] = {{"method", "exact"}, {"order", 2}};
  cfg["bias"] = {{"convention", "mass_weighted"}};
  cfg["partitions"] = {
      {"a", {{{"column", "sex"}}, {{"column", "age"}, {"bins", {{18, 25}, {25, 76}}}}}},
      {"b", {{{"column", "sex"}}, {{"column", "age"}, {"bins", {{18, 25}, {25, 76}}}}}}};
  cfg["recourse"] = {{"alphas", {0.0, 0.25, 0.5, 0.75, 1.0}}};
  detail::write_config(dir, "config.json", cfg);
}

/// Two groups; a fixed policy subtracts 3 logits from group "protected".
/// Its members sit just around the boundary while the reference group is
/// far on either side, so the protected negatives are forced onto reference
/// positives. Rows are filtered by the policy's own prediction.
inline void planted_bias(const fs::path& dir, std::uint64_t seed, std::size_t per_group = 200) {
  using detail::Col;
  const std::vector<Col> cols{{"group", "categorical", "immutable", true}, {"x", "numeric", "actionable"}};
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> jitter(0.0, 0.02);
  detail::CsvWriter csv(cols);
  const std::size_t low = static_cast<std::size_t>(std::llround(0.6 * static_cast<double>(per_group)));
  for (std::size_t i = 0; i < per_group; ++i)
    csv.row({"protected", detail::fixed((i < low ? 1.3 : 1.7) + jitter(rng))});
  for (std::size_t i = 0; i < per_group; ++i)
    csv.row({"reference", detail::fixed((i < per_group / 2 ? -2.0 : 2.0) + jitter(rng))});
  write_text(dir / "planted.csv", csv.str());
  write_json(dir / "planted_schema.json", detail::schema_json(cols, ""));

  // logit = 2 x - 3 [group = protected], restated in encoded units.
  const auto enc = detail::refit(dir / "planted_schema.json", {dir / "planted.csv"});
  const auto& x = enc.features()[1];
  Policy p;
  p.weights = {-3.0, 0.0, 2.0 * x.std};
  p.intercept = 2.0 * x.mean;
  p.feature_columns = enc.column_names();
  p.encoder_fingerprint = enc.fingerprint();
  save_policy(dir / "planted_policy.json", p);

  ordered_json cfg;
  cfg["seed"] = seed;
  cfg["output_dir"] = "out";
  cfg["population_a"] = {{"data", "planted.csv"}, {"schema", "planted_schema.json"}, {"predicted", 0}};
  cfg["population_b"] = {{"data", "planted.csv"}, {"schema", "planted_schema.json"}, {"predicted", 1}};
  cfg["policy_a"] = {{"source", "load"}, {"path", "planted_policy.json"}};
  cfg["partitions"] = {{"a", {{{"column", "group"}}, {{"column", "predicted"}}}},
                       {"b", {{{"column", "group"}}, {{"column", "predicted"}}}}};
  cfg["recourse"] = {{"alphas", {0.0, 0.5, 1.0}}};
  detail::write_config(dir, "config.json", cfg);
}

/// 100 rows audited against themselves under one trained policy.
inline void self_audit(const fs::path& dir, std::uint64_t seed, std::size_t n = 100) {
  using detail::Col;
  const std::vector<Col> cols{{"income", "numeric", "actionable"},
                              {"debt", "numeric", "actionable"},
                              {"region", "categorical", "immutable", true},
                              {"tenure", "numeric", "non_actionable"},
                              {"approved", "numeric", nullptr}};
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> z(0.0, 1.0);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const char* regions[] = {"north", "south", "west"};
  detail::CsvWriter csv(cols);
  for (std::size_t i = 0; i < n; ++i) {
    const double income = 50.0 + 15.0 * z(rng);
    const double debt = 20.0 + 8.0 * z(rng);
    const std::size_t reg = detail::pick(rng, {0.4, 0.35, 0.25});
    const double tenure = 5.0 + 3.0 * z(rng);
    const bool ok = u(rng) < sigmoid(0.08 * (income - 50.0) - 0.12 * (debt - 20.0) + 0.1 * (tenure - 5.0));
    csv.row({detail::fixed(income), detail::fixed(debt), regions[reg], detail::fixed(tenure), ok ? "1" : "0"});
  }
  write_text(dir / "self.csv", csv.str());
  write_json(dir / "self_schema.json", detail::schema_json(cols, "1"));

  ordered_json cfg;
  cfg["seed"] = seed;
  cfg["output_dir"] = "out";
  cfg["population_a"] = {{"data", "self.csv"}, {"schema", "self_schema.json"}};
  cfg["policy_a"] = {{"source", "train"}};
  cfg["partitions"] = {{"a", {{{"column", "region"}}}}, {"b", {{{"column", "region"}}}}};
  cfg["recourse"] = {{"alphas", {0.0, 0.5, 1.0}}};
  detail::write_config(dir, "config.json", cfg);
}

/// One admissions year: school A students all face the same lottery (a
/// constant policy), school B admits its top-GPA students outright.
inline void blue_college(const fs::path& dir, std::uint64_t seed, double rule = 0.25, std::size_t n = 400) {
  if (!(rule > 0.0 && rule < 1.0)) throw InputError("simulate", "generated rule must lie in (0, 1)");
  using detail::Col;
  const std::vector<Col> cols{{"gpa", "numeric", "immutable"}, {"admitted", "numeric", nullptr}};
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gpa(3.0, 0.5);
  std::bernoulli_distribution lottery(rule);
  detail::CsvWriter a(cols), b(cols);
  for (std::size_t i = 0; i < n; ++i) a.row({detail::fixed(gpa(rng)), lottery(rng) ? "1" : "0"});
  std::vector<double> g(n);
  for (double& v : g) v = std::round(gpa(rng) * 1e4) / 1e4;
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t p, std::size_t q) { return g[p] > g[q]; });
  std::vector<int> admit(n, 0);
  const std::size_t k = top_admit_count(rule, n);
  for (std::size_t r = 0; r < k; ++r) admit[order[r]] = 1;
  for (std::size_t i = 0; i < n; ++i) b.row({format_number(g[i]), admit[i] ? "1" : "0"});
  write_text(dir / "school_a.csv", a.str());
  write_text(dir / "school_b.csv", b.str());
  write_json(dir / "school_schema.json", detail::schema_json(cols, "1"));

  const auto enc = detail::refit(dir / "school_schema.json", {dir / "school_a.csv", dir / "school_b.csv"});
  Policy lotto;
  lotto.weights = {0.0};
  lotto.intercept = std::log(rule / (1.0 - rule));
  lotto.feature_columns = enc.column_names();
  lotto.encoder_fingerprint = enc.fingerprint();
  save_policy(dir / "lottery_policy.json", lotto);

  ordered_json cfg;
  cfg["seed"] = seed;
  cfg["output_dir"] = "out";
  cfg["population_a"] = {{"data", "school_a.csv"}, {"schema", "school_schema.json"}};
  cfg["population_b"] = {{"data", "school_b.csv"}, {"schema", "school_schema.json"}};
  cfg["policy_a"] = {{"source", "load"}, {"path", "lottery_policy.json"}};
  cfg["policy_b"] = {{"source", "label"}};
  cfg["simulation"] = {{"rules", {0.1, 0.25, 0.5}}, {"n_a", n}, {"n_b", n}, {"years", 50}};
  detail::write_config(dir, "config.json", cfg);
}

/// Two individuals per side scored by their labels: A = {1, 0}, B = {1, 1}.
inline void fixture(const fs::path& dir) {
  using detail::Col;
  const std::vector<Col> cols{{"f", "numeric", "actionable"}, {"y", "numeric", nullptr}};
  detail::CsvWriter a(cols), b(cols);
  a.row({"0", "1"});
  a.row({"1", "0"});
  b.row({"0.5", "1"});
  b.row({"2", "1"});
  write_text(dir / "fixture_a.csv", a.str());
  write_text(dir / "fixture_b.csv", b.str());
  write_json(dir / "fixture_schema.json", detail::schema_json(cols, "1"));
  ordered_json cfg;
  cfg["seed"] = 0;
  cfg["output_dir"] = "out";
  cfg["population_a"] = {{"data", "fixture_a.csv"}, {"schema", "fixture_schema.json"}};
  cfg["population_b"] = {{"data", "fixture_b.csv"}, {"schema", "fixture_schema.json"}};
  cfg["policy_a"] = {{"source", "label"}};
  detail::write_config(dir, "config.json", cfg);
}

/// Column roles for the public COMPAS two-year file. The table itself is not
/// bundled; point population paths at a local copy.
inline void compas_schema(const fs::path& dir) {
  using detail::Col;
  const std::vector<Col> cols{{"priors_count", "numeric", "actionable"},
                              {"age_above_45", "categorical", "immutable"},
                              {"age_below_25", "categorical", "immutable"},
                              {"female", "categorical", "immutable", true, true},
                              {"misdemeanor", "categorical", "non_actionable"},
                              {"race", "categorical", "immutable", true, true},
                              {"two_year_recid", "numeric", nullptr}};
  write_json(dir / "compas_schema.json", detail::schema_json(cols, "1"));
  ordered_json cfg;
  cfg["seed"] = 0;
  cfg["output_dir"] = "out";
  cfg["population_a"] = {{"data", "compas.csv"},
                         {"schema", "compas_schema.json"},
                         {"filter", {{"column", "race"}, {"equals", "African-American"}}}};
  cfg["population_b"] = {{"data", "compas.csv"},
                         {"schema", "compas_schema.json"},
                         {"filter", {{"column", "race"}, {"equals", "Caucasian"}}}};
  cfg["policy_a"] = {{"source", "train"}};
  cfg["partitions"] = {{"a", {{{"column", "female"}}, {{"column", "predicted"}}}},
                       {"b", {{{"column", "female"}}, {{"column", "predicted"}}}}};
  detail::write_config(dir, "config.json", cfg);
}

inline const std::vector<std::string>& kinds() {
  static const std::vector<std::string> k{"credit", "planted-bias", "self-audit", "blue-college", "fixture", "compas"};
  return k;
}

inline void by_name(const std::string& kind, const fs::path& dir, std::uint64_t seed) {
  fs::create_directories(dir);
  if (kind == "credit")
    credit(dir, seed);
  else if (kind == "planted-bias")
    planted_bias(dir, seed);
  else if (kind == "self-audit")
    self_audit(dir, seed);
  else if (kind == "blue-college")
    blue_college(dir, seed);
  else if (kind == "fixture")
    fixture(dir);
  else if (kind == "compas")
    compas_schema(dir);
  else
    throw InputError("audit_cli", "unknown generator '" + kind + "'");
}

}  // namespace otfair::generate
