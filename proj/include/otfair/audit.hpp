#pragma once

#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"
#include "otfair/bias.hpp"
#include "otfair/dataset.hpp"
#include "otfair/error.hpp"
#include "otfair/parity.hpp"
#include "otfair/policy.hpp"
#include "otfair/recourse.hpp"
#include "otfair/serialize.hpp"
#include "otfair/simulate.hpp"
#include "otfair/transport.hpp"

namespace otfair {

namespace fs = std::filesystem;

struct PopulationConfig {
  fs::path data;
  fs::path schema;
  /// Keep rows whose raw cell in `filter_column` equals `filter_value`.
  std::optional<std::pair<std::string, std::string>> filter;
  /// Keep rows the population's policy predicts as this label.
  std::optional<int> predicted;
};

enum class PolicySource { train, load, label };

struct PolicyConfig {
  PolicySource source = PolicySource::train;
  fs::path path;
  TrainOptions train;
  /// Train on a seeded split of this size and report held-out accuracy.
  std::optional<double> train_fraction;
};

struct BiasSettings {
  BiasConvention convention = BiasConvention::mass_weighted;
  /// Restrict the feature metric to columns of these roles (all if empty).
  std::vector<FeatureRole> roles;
  /// Or to these raw feature names (overrides roles).
  std::vector<std::string> features;
  FeatureNormalization normalization = FeatureNormalization::none;
  GroundMetric metric = GroundMetric::euclidean;
};

struct AuditConfig {
  fs::path base_dir;
  fs::path output_dir = "out";
  std::uint64_t seed = 0;
  double decision_threshold = 0.5;
  PopulationConfig population_a;
  std::optional<PopulationConfig> population_b;
  PolicyConfig policy_a;
  std::optional<PolicyConfig> policy_b;
  SolverConfig solver;
  double order = 2.0;
  GroundMetric outcome_metric = GroundMetric::euclidean;
  bool write_coupling = true;
  BiasSettings bias;
  std::vector<GroupingSpec> partition_a;
  std::vector<GroupingSpec> partition_b;
  std::vector<double> alphas{0.0, 0.25, 0.5, 0.75, 1.0};
  SimulationSpec simulation;
  std::vector<double> rules{0.1, 0.25, 0.5};

  void validate() const {
    solver.validate();
    if (!(order >= 1.0)) throw InputError("audit_cli", "solver.order must be >= 1");
    if (!(decision_threshold > 0.0 && decision_threshold < 1.0))
      throw InputError("audit_cli", "decision_threshold must lie in (0, 1)");
    for (double a : alphas)
      if (!(a >= 0.0 && a <= 1.0)) throw InputError("audit_cli", "alpha " + num(a) + " outside [0, 1]");
    for (double r : rules)
      if (!(r >= 0.0 && r <= 1.0)) throw InputError("audit_cli", "rule " + num(r) + " outside [0, 1]");
  }
};

namespace detail {

inline GroundMetric parse_metric(const std::string& s) {
  if (s == "euclidean" || s == "l2") return GroundMetric::euclidean;
  if (s == "manhattan" || s == "l1") return GroundMetric::manhattan;
  throw InputError("audit_cli", "unknown ground metric '" + s + "'");
}

inline void check_keys(const nlohmann::json& j, const std::string& where, std::initializer_list<const char*> allowed) {
  if (!j.is_object()) throw InputError("audit_cli", where + " must be a JSON object");
  for (const auto& [k, v] : j.items()) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || k == a;
    if (!ok) throw InputError("audit_cli", "unknown key '" + k + "' in " + where);
  }
}

inline PopulationConfig parse_population(const nlohmann::json& j, const fs::path& base, const std::string& where) {
  check_keys(j, where, {"data", "schema", "filter", "predicted"});
  PopulationConfig p;
  p.data = base / j.at("data").get<std::string>();
  p.schema = base / j.at("schema").get<std::string>();
  if (j.contains("filter")) {
    const auto& f = j["filter"];
    check_keys(f, where + ".filter", {"column", "equals"});
    const auto& eq = f.at("equals");
    p.filter = {f.at("column").get<std::string>(), eq.is_string() ? eq.get<std::string>() : eq.dump()};
  }
  if (j.contains("predicted")) {
    const int v = j["predicted"].get<int>();
    if (v != 0 && v != 1) throw InputError("audit_cli", where + ".predicted must be 0 or 1");
    p.predicted = v;
  }
  return p;
}

inline PolicyConfig parse_policy(const nlohmann::json& j, const fs::path& base, const std::string& where) {
  check_keys(j, where, {"source", "path", "l2", "max_iterations", "tolerance", "train_fraction"});
  PolicyConfig p;
  const auto src = j.value("source", std::string("train"));
  if (src == "train")
    p.source = PolicySource::train;
  else if (src == "load")
    p.source = PolicySource::load;
  else if (src == "label")
    p.source = PolicySource::label;
  else
    throw InputError("audit_cli", where + ".source must be train, load or label");
  if (j.contains("path")) p.path = base / j["path"].get<std::string>();
  if (p.source == PolicySource::load && p.path.empty()) throw InputError("audit_cli", where + " needs a path");
  p.train.l2 = j.value("l2", p.train.l2);
  p.train.max_iterations = j.value("max_iterations", p.train.max_iterations);
  p.train.tolerance = j.value("tolerance", p.train.tolerance);
  if (j.contains("train_fraction")) p.train_fraction = j["train_fraction"].get<double>();
  return p;
}

inline std::vector<GroupingSpec> parse_axes(const nlohmann::json& j, const std::string& where) {
  std::vector<GroupingSpec> out;
  if (!j.is_array()) throw InputError("audit_cli", where + " must be an array");
  for (const auto& a : j) {
    check_keys(a, where + "[]", {"column", "bins"});
    GroupingSpec g;
    g.column = a.at("column").get<std::string>();
    if (a.contains("bins"))
      for (const auto& b : a["bins"]) {
        if (!b.is_array() || b.size() != 2) throw InputError("audit_cli", where + ": each bin is [lo, hi]");
        g.bins.emplace_back(b[0].get<double>(), b[1].get<double>());
      }
    out.push_back(std::move(g));
  }
  return out;
}

}  // namespace detail

inline AuditConfig parse_config(const nlohmann::json& j, const fs::path& base_dir) {
  AuditConfig c;
  c.base_dir = base_dir;
  try {
    detail::check_keys(j, "config",
                       {"seed", "output_dir", "decision_threshold", "population_a", "population_b", "policy_a",
                        "policy_b", "solver", "bias", "partitions", "recourse", "simulation"});
    c.seed = j.value("seed", c.seed);
    if (j.contains("output_dir")) c.output_dir = base_dir / j["output_dir"].get<std::string>();
    else c.output_dir = base_dir / c.output_dir;
    c.decision_threshold = j.value("decision_threshold", c.decision_threshold);
    if (j.contains("population_a")) c.population_a = detail::parse_population(j["population_a"], base_dir, "population_a");
    if (j.contains("population_b")) c.population_b = detail::parse_population(j["population_b"], base_dir, "population_b");
    if (j.contains("policy_a")) c.policy_a = detail::parse_policy(j["policy_a"], base_dir, "policy_a");
    if (j.contains("policy_b")) c.policy_b = detail::parse_policy(j["policy_b"], base_dir, "policy_b");
    if (j.contains("solver")) {
      const auto& s = j["solver"];
      detail::check_keys(s, "solver",
                         {"method", "order", "ground_metric", "entropic_epsilon", "max_iterations", "convergence_tol",
                          "support_threshold", "write_coupling"});
      const auto m = s.value("method", std::string("exact"));
      if (m == "exact")
        c.solver.method = SolverMethod::exact;
      else if (m == "entropic")
        c.solver.method = SolverMethod::entropic;
      else
        throw InputError("audit_cli", "solver.method must be exact or entropic");
      c.order = s.value("order", c.order);
      c.outcome_metric = detail::parse_metric(s.value("ground_metric", std::string("euclidean")));
      c.solver.entropic_epsilon = s.value("entropic_epsilon", c.solver.entropic_epsilon);
      c.solver.max_iterations = s.value("max_iterations", c.solver.max_iterations);
      c.solver.convergence_tol = s.value("convergence_tol", c.solver.convergence_tol);
      c.solver.support_threshold = s.value("support_threshold", c.solver.support_threshold);
      c.write_coupling = s.value("write_coupling", c.write_coupling);
    }
    if (j.contains("bias")) {
      const auto& b = j["bias"];
      detail::check_keys(b, "bias", {"convention", "roles", "features", "normalization", "metric"});
      const auto conv = b.value("convention", std::string("mass_weighted"));
      if (conv == "mass_weighted")
        c.bias.convention = BiasConvention::mass_weighted;
      else if (conv == "expectation")
        c.bias.convention = BiasConvention::expectation;
      else
        throw InputError("audit_cli", "bias.convention must be mass_weighted or expectation");
      if (b.contains("roles"))
        for (const auto& r : b["roles"]) c.bias.roles.push_back(parse_role(r.get<std::string>()));
      if (b.contains("features")) c.bias.features = b["features"].get<std::vector<std::string>>();
      const auto norm = b.value("normalization", std::string("none"));
      if (norm == "none")
        c.bias.normalization = FeatureNormalization::none;
      else if (norm == "per_individual_max")
        c.bias.normalization = FeatureNormalization::per_individual_max;
      else
        throw InputError("audit_cli", "bias.normalization must be none or per_individual_max");
      c.bias.metric = detail::parse_metric(b.value("metric", std::string("euclidean")));
    }
    if (j.contains("partitions")) {
      const auto& p = j["partitions"];
      detail::check_keys(p, "partitions", {"a", "b"});
      if (p.contains("a")) c.partition_a = detail::parse_axes(p["a"], "partitions.a");
      if (p.contains("b")) c.partition_b = detail::parse_axes(p["b"], "partitions.b");
    }
    if (j.contains("recourse")) {
      const auto& r = j["recourse"];
      detail::check_keys(r, "recourse", {"alphas"});
      if (r.contains("alphas")) c.alphas = r["alphas"].get<std::vector<double>>();
    }
    if (j.contains("simulation")) {
      const auto& s = j["simulation"];
      detail::check_keys(s, "simulation", {"rules", "n_a", "n_b", "years"});
      if (s.contains("rules")) c.rules = s["rules"].get<std::vector<double>>();
      c.simulation.n_a = s.value("n_a", c.simulation.n_a);
      c.simulation.n_b = s.value("n_b", c.simulation.n_b);
      c.simulation.years = s.value("years", c.simulation.years);
    }
  } catch (const nlohmann::json::exception& e) {
    throw InputError("audit_cli", std::string("malformed config: ") + e.what());
  }
  c.validate();
  return c;
}

inline AuditConfig load_config(const fs::path& path) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_text_file(path, "audit_cli"));
  } catch (const nlohmann::json::parse_error& e) {
    throw InputError("audit_cli", path.string() + ": " + e.what());
  }
  return parse_config(j, path.parent_path());
}

// ---------------------------------------------------------------------------
// Pipeline

struct Population {
  /// Selected rows, encoded with the shared encoder.
  Dataset data;
  /// Row indices of the selection within its file.
  std::vector<std::size_t> file_rows;
  OutcomeSet outcomes;
  std::vector<int> predictions;
};

struct PreparedAudit {
  Encoder encoder;
  Policy policy_a;
  Policy policy_b;
  bool label_a = false;
  bool label_b = false;
  Population a;
  Population b;
  ordered_json policies = ordered_json::object();
  std::vector<std::string> warnings;
};

namespace detail {

inline bool same_schema(const Schema& x, const Schema& y) {
  if (x.columns.size() != y.columns.size() || x.label_positive_value != y.label_positive_value) return false;
  for (std::size_t k = 0; k < x.columns.size(); ++k) {
    const auto &p = x.columns[k], &q = y.columns[k];
    if (p.name != q.name || p.kind != q.kind || p.role != q.role || p.is_label != q.is_label ||
        p.exclude_from_policy != q.exclude_from_policy)
      return false;
  }
  return true;
}

inline Dataset select_rows(const Dataset& d, const std::vector<std::size_t>& rows) {
  Dataset out;
  out.encoder = d.encoder;
  out.encoded = d.encoded.select_rows(rows);
  out.raw.columns = d.raw.columns;
  out.raw.source = d.raw.source;
  for (std::size_t r : rows) {
    out.raw.cells.push_back(d.raw.cells[r]);
    out.raw.numbers.push_back(d.raw.numbers[r]);
    out.raw.lines.push_back(d.raw.lines[r]);
    if (d.has_labels()) out.labels.push_back(d.labels[r]);
  }
  return out;
}

inline ordered_json train_policy(const PolicyConfig& pc, const Dataset& file, const std::uint64_t seed,
                                 double threshold, Policy& out) {
  if (!file.has_labels()) throw InputError("audit_cli", "training a policy needs a label column in " + file.raw.source);
  auto opt = pc.train;
  opt.seed = seed;
  const Matrix x = file.policy_features();
  ordered_json info;
  info["source"] = "train";
  info["data"] = fs::path(file.raw.source).filename().string();
  TrainDiagnostics diag;
  if (pc.train_fraction) {
    auto [tr, te] = split(file.rows(), *pc.train_fraction, seed);
    std::vector<int> ytr, yte;
    for (auto i : tr) ytr.push_back(file.labels[i]);
    for (auto i : te) yte.push_back(file.labels[i]);
    out = train_logistic(x.select_rows(tr), ytr, opt, &diag);
    auto scored = apply_policy(out, x.select_rows(te));
    std::size_t correct = 0;
    for (std::size_t k = 0; k < te.size(); ++k)
      correct += (scored.positive_probability(k) >= threshold) == (yte[k] == 1);
    info["train_rows"] = tr.size();
    info["test_rows"] = te.size();
    info["test_accuracy"] = static_cast<double>(correct) / static_cast<double>(te.size());
  } else {
    out = train_logistic(x, file.labels, opt, &diag);
    info["train_rows"] = file.rows();
  }
  info["iterations"] = diag.iterations;
  info["gradient_norm"] = diag.gradient_norm;
  info["loss"] = diag.loss;
  return info;
}

}  // namespace detail

/// Loads both populations, fits one encoder over their files, resolves the
/// policies, applies the row selections and computes outcome sets.
inline PreparedAudit prepare(const AuditConfig& cfg) {
  if (cfg.population_a.data.empty()) throw InputError("audit_cli", "config has no population_a");
  const PopulationConfig& pa = cfg.population_a;
  const PopulationConfig& pb = cfg.population_b ? *cfg.population_b : cfg.population_a;
  const Schema schema = load_schema(pa.schema);
  if (pb.schema != pa.schema && !detail::same_schema(schema, load_schema(pb.schema)))
    throw InputError("audit_cli", "population_a and population_b use different schemas");

  const RawTable raw_a = read_table(pa.data, schema);
  const bool same_file = fs::weakly_canonical(pa.data) == fs::weakly_canonical(pb.data);
  const RawTable raw_b = same_file ? raw_a : read_table(pb.data, schema);

  PreparedAudit out;
  out.encoder = same_file ? Encoder::fit(schema, {&raw_a}) : Encoder::fit(schema, {&raw_a, &raw_b});
  out.warnings = out.encoder.warnings();
  const Dataset file_a = encode_dataset(raw_a, out.encoder, schema);
  const Dataset file_b = encode_dataset(raw_b, out.encoder, schema);

  auto resolve = [&](const PolicyConfig& pc, const Dataset& file, Policy& policy, bool& label) {
    ordered_json info;
    if (pc.source == PolicySource::label) {
      if (!file.has_labels()) throw InputError("audit_cli", "label policy needs a label column");
      label = true;
      info["source"] = "label";
      return info;
    }
    if (pc.source == PolicySource::load) {
      policy = load_policy(pc.path);
      const auto names = file.policy_column_names();
      if (policy.weights.size() != names.size())
        throw InputError("policy", pc.path.filename().string() + " has " + std::to_string(policy.weights.size()) +
                                       " weights but the encoding has " + std::to_string(names.size()) +
                                       " policy columns");
      if (!policy.feature_columns.empty() && policy.feature_columns != names)
        throw InputError("policy", pc.path.filename().string() + " was fit on different feature columns");
      if (!policy.encoder_fingerprint.empty() && policy.encoder_fingerprint != out.encoder.fingerprint())
        throw InputError("policy", pc.path.filename().string() + " encoder fingerprint " +
                                       policy.encoder_fingerprint + " does not match this encoding (" +
                                       out.encoder.fingerprint() + ")");
      info["source"] = "load";
      info["path"] = pc.path.filename().string();
      return info;
    }
    info = detail::train_policy(pc, file, cfg.seed, cfg.decision_threshold, policy);
    policy.feature_columns = file.policy_column_names();
    policy.encoder_fingerprint = out.encoder.fingerprint();
    return info;
  };

  out.policies["a"] = resolve(cfg.policy_a, file_a, out.policy_a, out.label_a);
  if (cfg.policy_b) {
    out.policies["b"] = resolve(*cfg.policy_b, file_b, out.policy_b, out.label_b);
  } else {
    out.policy_b = out.policy_a;
    out.label_b = out.label_a;
    out.policies["b"] = "same as a";
  }

  auto build = [&](const PopulationConfig& pc, const Dataset& file, const Policy& policy, bool label,
                   const char* name) {
    std::vector<int> pred;
    if (label) {
      pred = file.labels;
    } else {
      auto o = apply_policy(policy, file.policy_features());
      std::vector<double> probs(o.size());
      for (std::size_t i = 0; i < o.size(); ++i) probs[i] = o.positive_probability(i);
      pred = threshold_labels(probs, cfg.decision_threshold);
    }
    std::optional<std::size_t> fcol;
    if (pc.filter) fcol = file.raw.column_index(pc.filter->first);
    Population p;
    for (std::size_t r = 0; r < file.rows(); ++r) {
      if (fcol && file.raw.cells[r][*fcol] != pc.filter->second) continue;
      if (pc.predicted && pred[r] != *pc.predicted) continue;
      p.file_rows.push_back(r);
      p.predictions.push_back(pred[r]);
    }
    if (p.file_rows.empty()) throw InputError("audit_cli", std::string("population ") + name + " selects no rows");
    p.data = detail::select_rows(file, p.file_rows);
    p.outcomes = label ? label_outcomes(p.data.labels) : apply_policy(policy, p.data.policy_features());
    return p;
  };
  out.a = build(pa, file_a, out.policy_a, out.label_a, "a");
  out.b = build(pb, file_b, out.policy_b, out.label_b, "b");
  return out;
}

struct TransportRun {
  Coupling pi;
  double wasserstein = 0.0;
};

inline TransportRun transport(const AuditConfig& cfg, const PreparedAudit& p) {
  const auto ma = empirical_outcome_measure(p.a.outcomes);
  const auto mb = empirical_outcome_measure(p.b.outcomes);
  const auto c = build_cost_matrix(ma, mb, cfg.order, cfg.outcome_metric);
  auto pi = solve(ma, mb, c, cfg.solver);
  const double w = wasserstein_from_objective(pi.objective(), cfg.order);
  return {std::move(pi), w};
}

/// Raw table plus a categorical "predicted" column, so partitions can split
/// on the policy's hard labels.
inline RawTable with_predictions(const Population& p) {
  RawTable t = p.data.raw;
  for (const auto& c : t.columns)
    if (c.name == "predicted") return t;
  ColumnSpec spec;
  spec.name = "predicted";
  spec.kind = ColumnKind::categorical;
  t.columns.push_back(spec);
  for (std::size_t r = 0; r < t.rows(); ++r) {
    t.cells[r].push_back(std::to_string(p.predictions[r]));
    t.numbers[r].push_back(std::nan(""));
  }
  return t;
}

inline FeatureMetric feature_metric(const AuditConfig& cfg, const Encoder& enc) {
  FeatureMetric m;
  m.kind = cfg.bias.metric;
  m.normalization = cfg.bias.normalization;
  if (!cfg.bias.features.empty()) {
    for (const auto& name : cfg.bias.features) {
      bool found = false;
      for (const auto& f : enc.features())
        if (f.name == name) {
          for (std::size_t k = 0; k < f.width; ++k) m.feature_mask.push_back(f.offset + k);
          found = true;
        }
      if (!found) throw InputError("audit_cli", "bias.features names unknown feature '" + name + "'");
    }
    std::sort(m.feature_mask.begin(), m.feature_mask.end());
  } else {
    const auto roles = enc.roles();
    for (std::size_t c = 0; c < roles.size(); ++c)
      if (cfg.bias.roles.empty() ||
          std::find(cfg.bias.roles.begin(), cfg.bias.roles.end(), roles[c]) != cfg.bias.roles.end())
        m.feature_mask.push_back(c);
  }
  if (m.feature_mask.empty()) throw InputError("audit_cli", "bias feature selection matches no encoded columns");
  return m;
}

/// Full-width policy: zero weight on encoded columns the policy ignores.
inline Policy expand_policy(const Policy& p, const Encoder& enc) {
  const auto cols = enc.policy_columns();
  Policy out = p;
  out.weights.assign(enc.width(), 0.0);
  for (std::size_t k = 0; k < cols.size(); ++k) out.weights[cols[k]] = p.weights[k];
  return out;
}

// ---------------------------------------------------------------------------
// Commands. Each writes its report files under cfg.output_dir and returns
// the main JSON report.

namespace detail {

inline ordered_json header(const char* command, const AuditConfig& cfg, const PreparedAudit& p) {
  ordered_json j;
  j["command"] = command;
  j["seed"] = cfg.seed;
  j["encoder_fingerprint"] = p.encoder.fingerprint();
  j["n_a"] = p.a.outcomes.size();
  j["n_b"] = p.b.outcomes.size();
  j["policies"] = p.policies;
  j["warnings"] = p.warnings;
  return j;
}

inline ordered_json transport_json(const AuditConfig& cfg, const TransportRun& t) {
  ordered_json j;
  j["wasserstein"] = t.wasserstein;
  j["objective"] = t.pi.objective();
  j["order"] = cfg.order;
  j["ground_metric"] = cfg.outcome_metric == GroundMetric::euclidean ? "euclidean" : "manhattan";
  j["solver"] = to_json(t.pi.stats());
  return j;
}

/// Parity baselines between the two populations (A is group 0, B group 1).
inline ordered_json parity_json(const PreparedAudit& p, double threshold) {
  std::vector<int> pred, group, truth;
  for (int v : p.a.predictions) pred.push_back(v), group.push_back(0);
  for (int v : p.b.predictions) pred.push_back(v), group.push_back(1);
  const bool labelled = p.a.data.has_labels() && p.b.data.has_labels();
  if (labelled) {
    truth = p.a.data.labels;
    truth.insert(truth.end(), p.b.data.labels.begin(), p.b.data.labels.end());
  }
  auto rep = parity_report(pred, group, truth, 0.8);
  auto j = to_json(rep);
  std::vector<double> scores;
  for (std::size_t i = 0; i < p.a.outcomes.size(); ++i) scores.push_back(p.a.outcomes.positive_probability(i));
  for (std::size_t i = 0; i < p.b.outcomes.size(); ++i) scores.push_back(p.b.outcomes.positive_probability(i));
  j["ddp_scores"] = demographic_parity_difference(std::span<const double>(scores), group);
  j["decision_threshold"] = threshold;
  return j;
}

inline void maybe_write_coupling(const AuditConfig& cfg, const TransportRun& t) {
  if (cfg.write_coupling) write_text(cfg.output_dir / "coupling.csv", coupling_csv(t.pi, cfg.solver.support_threshold));
}

inline void save_trained(const AuditConfig& cfg, const PreparedAudit& p) {
  if (cfg.policy_a.source == PolicySource::train) save_policy(cfg.output_dir / "policy_a.json", p.policy_a);
  if (cfg.policy_b && cfg.policy_b->source == PolicySource::train)
    save_policy(cfg.output_dir / "policy_b.json", p.policy_b);
}

}  // namespace detail

inline ordered_json cmd_distance(const AuditConfig& cfg) {
  const auto p = prepare(cfg);
  const auto t = transport(cfg, p);
  auto j = detail::header("distance", cfg, p);
  j["transport"] = detail::transport_json(cfg, t);
  j["parity"] = detail::parity_json(p, cfg.decision_threshold);
  fs::create_directories(cfg.output_dir);
  detail::maybe_write_coupling(cfg, t);
  detail::save_trained(cfg, p);
  write_json(cfg.output_dir / "distance.json", j);
  return j;
}

inline ordered_json cmd_bias(const AuditConfig& cfg) {
  const auto p = prepare(cfg);
  const auto t = transport(cfg, p);
  const auto part_a = partition_by(with_predictions(p.a), cfg.partition_a);
  const auto part_b = partition_by(with_predictions(p.b), cfg.partition_b);
  const auto metric = feature_metric(cfg, p.encoder);
  const auto rep = decompose(t.pi, p.a.data.encoded, p.b.data.encoded, part_a, part_b, metric, cfg.bias.convention,
                             cfg.solver.support_threshold);

  auto j = detail::header("bias", cfg, p);
  j["transport"] = detail::transport_json(cfg, t);
  std::vector<std::string> mask_names;
  for (std::size_t c : metric.feature_mask) mask_names.push_back(p.encoder.column_names()[c]);
  j["feature_mask"] = mask_names;
  j["bias"] = to_json(rep);
  // Target-group mass: the share every source group would send under the
  // independent coupling.
  std::vector<double> product(part_b.size());
  for (std::size_t h = 0; h < part_b.size(); ++h)
    product[h] = static_cast<double>(part_b.groups[h].size()) / static_cast<double>(p.b.outcomes.size());
  j["product_shares"] = product;
  Matrix lift(rep.mass_shares.rows(), rep.mass_shares.cols());
  for (std::size_t g = 0; g < lift.rows(); ++g)
    for (std::size_t h = 0; h < lift.cols(); ++h) lift(g, h) = rep.mass_shares(g, h) / product[h];
  j["share_lift"] = matrix_json(lift);
  std::size_t degenerate = 0;
  for (bool d : rep.normalized_degenerate) degenerate += d;
  j["normalized_degenerate_count"] = degenerate;
  j["parity"] = detail::parity_json(p, cfg.decision_threshold);

  std::vector<std::string> group_of(p.a.outcomes.size());
  for (std::size_t g = 0; g < part_a.size(); ++g)
    for (std::size_t i : part_a.groups[g]) group_of[i] = part_a.names[g];
  fs::create_directories(cfg.output_dir);
  write_json(cfg.output_dir / "bias.json", j);
  write_text(cfg.output_dir / "decomposition.csv", matrix_csv(rep.decomposition, rep.groups_a, rep.groups_b));
  write_text(cfg.output_dir / "mass_shares.csv", matrix_csv(rep.mass_shares, rep.groups_a, rep.groups_b));
  write_text(cfg.output_dir / "individual_bias.csv", individual_bias_csv(rep, group_of));
  detail::maybe_write_coupling(cfg, t);
  detail::save_trained(cfg, p);
  return j;
}

inline ordered_json cmd_recourse(const AuditConfig& cfg) {
  const auto p = prepare(cfg);
  if (p.label_a) throw InputError("audit_cli", "recourse needs a scoring policy for population a, not labels");
  const auto t = transport(cfg, p);
  const auto roles = p.encoder.roles();
  const auto full = expand_policy(p.policy_a, p.encoder);
  const auto results = alpha_sweep(full, p.a.data.encoded, t.pi, p.b.data.encoded, cfg.alphas, roles,
                                   cfg.decision_threshold, {}, cfg.solver.support_threshold);
  const auto summary = feature_change_summary(results, p.a.data.encoded, p.encoder.blocks());

  // Guard the interpolation contract on what is written out.
  for (const auto& r : results)
    for (std::size_t k = 0; k < r.individual_ids.size(); ++k)
      for (std::size_t c = 0; c < roles.size(); ++c)
        if (roles[c] != FeatureRole::actionable && r.new_features(k, c) != p.a.data.encoded(r.individual_ids[k], c))
          throw NumericalError("recourse", "a non-actionable column changed during interpolation");

  auto j = detail::header("recourse", cfg, p);
  j["transport"] = detail::transport_json(cfg, t);
  j["decision_threshold"] = cfg.decision_threshold;
  std::vector<std::string> actionable;
  for (std::size_t c : actionable_columns(roles)) actionable.push_back(p.encoder.column_names()[c]);
  j["actionable_columns"] = actionable;
  ordered_json sweep = ordered_json::array();
  for (const auto& r : results) sweep.push_back(to_json(r, p.encoder.column_names()));
  j["sweep"] = sweep;
  ordered_json fc;
  fc["empty"] = summary.empty;
  fc["features"] = summary.features;
  fc["alphas"] = summary.alphas;
  fc["changes"] = matrix_json(summary.changes);
  j["feature_change_summary"] = fc;

  fs::create_directories(cfg.output_dir);
  write_json(cfg.output_dir / "recourse.json", j);
  write_text(cfg.output_dir / "recourse_long.csv", recourse_long_csv(results));
  write_text(cfg.output_dir / "recourse_features.csv", recourse_features_csv(results, p.encoder.column_names()));
  write_text(cfg.output_dir / "feature_changes.csv", feature_changes_csv(summary));
  detail::save_trained(cfg, p);
  return j;
}

inline ordered_json cmd_simulate(const AuditConfig& cfg) {
  ordered_json j;
  j["command"] = "simulate";
  j["seed"] = cfg.seed;
  j["n_a"] = cfg.simulation.n_a;
  j["n_b"] = cfg.simulation.n_b;
  j["years"] = cfg.simulation.years;
  std::ostringstream csv;
  csv << "rule,year,admits_a,admits_b,di_ratio,di_degenerate,wasserstein\n";
  ordered_json rules = ordered_json::array();
  std::vector<double> w_by_rule;
  for (double r : cfg.rules) {
    SimulationSpec spec = cfg.simulation;
    spec.rule = r;
    spec.seed = cfg.seed;
    const auto res = simulate_admissions(spec);
    double wmin = res.years.front().wasserstein, wmax = wmin;
    for (const auto& y : res.years) {
      wmin = std::min(wmin, y.wasserstein);
      wmax = std::max(wmax, y.wasserstein);
      csv << format_number(r) << ',' << y.year << ',' << y.admits_a << ',' << y.admits_b << ','
          << format_number(y.disparate_impact.ratio) << ',' << (y.disparate_impact.degenerate ? 1 : 0) << ','
          << format_number(y.wasserstein) << '\n';
    }
    ordered_json e;
    e["rule"] = r;
    e["wasserstein"] = res.years.front().wasserstein;
    e["closed_form"] = res.closed_form;
    e["wasserstein_spread"] = wmax - wmin;
    e["mean_di_ratio"] = json_number(res.mean_di);
    rules.push_back(e);
    w_by_rule.push_back(res.years.front().wasserstein);
  }
  j["rules"] = rules;
  bool increasing = true;
  for (std::size_t k = 1; k < w_by_rule.size(); ++k)
    increasing = increasing && (cfg.rules[k] > cfg.rules[k - 1]) && w_by_rule[k] > w_by_rule[k - 1];
  j["wasserstein_increasing_in_rule"] = increasing;
  fs::create_directories(cfg.output_dir);
  write_json(cfg.output_dir / "simulate.json", j);
  write_text(cfg.output_dir / "simulate.csv", csv.str());
  return j;
}

}  // namespace otfair
