#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "otfair/audit.hpp"
#include "otfair/generate.hpp"

namespace otfair {
namespace {

namespace fs = std::filesystem;

class TempDir : public ::testing::Test {
 protected:
  void SetUp() override {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    dir_ = fs::temp_directory_path() / (std::string("otfair_") + info->test_suite_name() + "_" + info->name());
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string slurp(const fs::path& p) const { return read_text_file(p); }

  void write(const fs::path& name, const std::string& body) const { write_text(dir_ / name, body); }

  AuditConfig config(const nlohmann::json& j) const { return parse_config(j, dir_); }

  fs::path dir_;
};

// Serialization -------------------------------------------------------------

TEST(FormatNumber, ShortestRoundTrip) {
  EXPECT_EQ(format_number(0.1), "0.1");
  EXPECT_EQ(format_number(1.0), "1");
  EXPECT_EQ(format_number(-2.5e-20), "-2.5e-20");
  EXPECT_EQ(format_number(INFINITY), "inf");
  EXPECT_EQ(format_number(-INFINITY), "-inf");
  EXPECT_EQ(format_number(std::nan("")), "nan");
  const double x = 0.6123724356957945;
  EXPECT_EQ(std::stod(format_number(x)), x);
  EXPECT_TRUE(json_number(INFINITY).is_null());
  EXPECT_EQ(json_number(2.0).get<double>(), 2.0);
}

TEST(PolicyJson, RoundTrip) {
  Policy p;
  p.weights = {0.5, -1.25, 3e-7};
  p.intercept = -0.1;
  p.feature_columns = {"a", "b=x", "b=y"};
  p.encoder_fingerprint = "0123456789abcdef";
  const auto q = policy_from_json(nlohmann::json::parse(to_json(p).dump()));
  EXPECT_EQ(q.weights, p.weights);
  EXPECT_EQ(q.intercept, p.intercept);
  EXPECT_EQ(q.class_labels, p.class_labels);
  EXPECT_EQ(q.feature_columns, p.feature_columns);
  EXPECT_EQ(q.encoder_fingerprint, p.encoder_fingerprint);
}

TEST(PolicyJson, Rejects) {
  EXPECT_THROW(policy_from_json(nlohmann::json::parse(R"({"intercept": 0})")), InputError);
  EXPECT_THROW(policy_from_json(nlohmann::json::parse(R"({"weights": [1], "intercept": 0,
                 "class_labels": ["a", "b", "c"]})")),
               InputError);
  EXPECT_THROW(policy_from_json(nlohmann::json::parse(R"({"weights": [1, 2], "intercept": 0,
                 "feature_columns": ["x"]})")),
               InputError);
  EXPECT_THROW(policy_from_json(nlohmann::json::parse(R"({"weights": ["x"], "intercept": 0})")), InputError);
}

TEST(CouplingCsv, FiltersBelowThreshold) {
  Matrix plan(2, 2);
  plan(0, 0) = 0.5;
  plan(0, 1) = 1e-15;
  plan(1, 1) = 0.5;
  Coupling pi(plan, {0.5, 0.5}, {0.5, 0.5}, 0.0);
  EXPECT_EQ(coupling_csv(pi, 1e-12), "i,j,mass\n0,0,0.5\n1,1,0.5\n");
}

TEST(MatrixCsv, QuotesNames) {
  Matrix m(1, 2);
  m(0, 0) = 0.25;
  m(0, 1) = 0.75;
  EXPECT_EQ(matrix_csv(m, {"a, b"}, {"x", "y\"z"}), "group,x,\"y\"\"z\"\n\"a, b\",0.25,0.75\n");
}

// Config ----------------------------------------------------------------------

TEST_F(TempDir, ConfigDefaultsAndPaths) {
  const auto c = config({{"population_a", {{"data", "d.csv"}, {"schema", "s.json"}}}});
  EXPECT_EQ(c.population_a.data, dir_ / "d.csv");
  EXPECT_EQ(c.output_dir, dir_ / "out");
  EXPECT_FALSE(c.population_b.has_value());
  EXPECT_EQ(c.policy_a.source, PolicySource::train);
  EXPECT_EQ(c.solver.method, SolverMethod::exact);
  EXPECT_EQ(c.order, 2.0);
  EXPECT_EQ(c.decision_threshold, 0.5);
  EXPECT_EQ(c.bias.convention, BiasConvention::mass_weighted);
}

TEST_F(TempDir, ConfigRejects) {
  const nlohmann::json pop = {{"data", "d.csv"}, {"schema", "s.json"}};
  EXPECT_THROW(config({{"populaton_a", pop}}), InputError);
  EXPECT_THROW(config({{"population_a", pop}, {"recourse", {{"alphas", {0.5, 1.5}}}}}), InputError);
  EXPECT_THROW(config({{"population_a", pop}, {"solver", {{"method", "lp"}}}}), InputError);
  EXPECT_THROW(config({{"population_a", pop}, {"policy_a", {{"source", "load"}}}}), InputError);
  EXPECT_THROW(config({{"population_a", {{"data", "d.csv"}, {"schema", "s.json"}, {"predicted", 2}}}}), InputError);
  EXPECT_THROW(config({{"population_a", pop}, {"partitions", {{"a", {{{"column", "x"}, {"bins", {{1}}}}}}}}}),
               InputError);
  EXPECT_THROW(config({{"population_a", pop}, {"decision_threshold", 1.0}}), InputError);
  EXPECT_THROW(config({{"population_a", pop}, {"seed", "zero"}}), InputError);
}

TEST_F(TempDir, MissingFilesAreInputErrors) {
  auto c = config({{"population_a", {{"data", "nope.csv"}, {"schema", "nope.json"}}}});
  EXPECT_THROW(prepare(c), InputError);
  EXPECT_THROW(load_config(dir_ / "absent.json"), InputError);
  write("bad.json", "{ not json");
  EXPECT_THROW(load_config(dir_ / "bad.json"), InputError);
}

// Pipeline --------------------------------------------------------------------

TEST_F(TempDir, FixtureMatchesHandLp) {
  generate::fixture(dir_);
  const auto cfg = load_config(dir_ / "config.json");
  const auto j = cmd_distance(cfg);
  // A outcomes (0,1),(1,0); B outcomes (0,1),(0,1). Either extreme coupling
  // pays 0 for the first source and |(1,0)-(0,1)|^2 = 2 for the second.
  const double identity = 0.5 * 0.0 + 0.5 * 2.0;
  const double swapped = 0.5 * 0.0 + 0.5 * 2.0;
  EXPECT_NEAR(j["transport"]["objective"].get<double>(), std::min(identity, swapped), 1e-12);
  EXPECT_NEAR(j["transport"]["wasserstein"].get<double>(), 1.0, 1e-12);
  EXPECT_TRUE(fs::exists(cfg.output_dir / "distance.json"));
  EXPECT_TRUE(fs::exists(cfg.output_dir / "coupling.csv"));
  const auto& di = j["parity"]["disparate_impact"];
  EXPECT_EQ(di["rate_group_0"].get<double>(), 0.5);
  EXPECT_EQ(di["rate_group_1"].get<double>(), 1.0);
  EXPECT_EQ(di["ratio"].get<double>(), 2.0);
}

TEST_F(TempDir, FixtureRejectsLabelRecourse) {
  generate::fixture(dir_);
  EXPECT_THROW(cmd_recourse(load_config(dir_ / "config.json")), InputError);
}

TEST_F(TempDir, SelfAuditIsNull) {
  generate::self_audit(dir_, 3);
  const auto cfg = load_config(dir_ / "config.json");
  const auto d = cmd_distance(cfg);
  EXPECT_LE(d["transport"]["wasserstein"].get<double>(), 1e-9);
  const auto b = cmd_bias(cfg);
  EXPECT_LE(b["bias"]["total_bias"].get<double>(), 1e-9);
  const auto& shares = b["bias"]["mass_shares"];
  for (std::size_t g = 0; g < shares.size(); ++g)
    for (std::size_t h = 0; h < shares[g].size(); ++h) EXPECT_NEAR(shares[g][h].get<double>(), g == h ? 1.0 : 0.0, 1e-10);
}

TEST_F(TempDir, SingleGroupPartitionsGiveOneByOne) {
  generate::self_audit(dir_, 1);
  auto j = nlohmann::json::parse(slurp(dir_ / "config.json"));
  j.erase("partitions");
  const auto b = cmd_bias(parse_config(j, dir_));
  EXPECT_EQ(b["bias"]["groups_a"].size(), 1u);
  EXPECT_EQ(b["bias"]["mass_shares"][0][0].get<double>(), 1.0);
  const auto csv = slurp(dir_ / "out" / "mass_shares.csv");
  EXPECT_EQ(csv, "group,all\nall,1\n");
}

TEST_F(TempDir, PlantedBiasForcesCrossGroupFlow) {
  generate::planted_bias(dir_, 0);
  const auto b = cmd_bias(load_config(dir_ / "config.json"));
  const auto ga = b["bias"]["groups_a"].get<std::vector<std::string>>();
  const auto gb = b["bias"]["groups_b"].get<std::vector<std::string>>();
  ASSERT_EQ(ga, (std::vector<std::string>{"group=protected & predicted=0", "group=reference & predicted=0"}));
  ASSERT_EQ(gb, (std::vector<std::string>{"group=protected & predicted=1", "group=reference & predicted=1"}));
  EXPECT_NEAR(b["bias"]["mass_shares"][0][1].get<double>(), 1.0, 1e-10);
  EXPECT_NEAR(b["product_shares"][1].get<double>(), 100.0 / 180.0, 1e-12);
  EXPECT_GE(b["share_lift"][0][1].get<double>(), 1.5);
}

TEST_F(TempDir, LoadedPolicyMustMatchEncoding) {
  generate::planted_bias(dir_, 0);
  auto p = load_policy(dir_ / "planted_policy.json");
  p.encoder_fingerprint = "ffffffffffffffff";
  save_policy(dir_ / "planted_policy.json", p);
  EXPECT_THROW(cmd_distance(load_config(dir_ / "config.json")), InputError);
  p.encoder_fingerprint.clear();
  p.weights.pop_back();
  p.feature_columns.pop_back();
  save_policy(dir_ / "planted_policy.json", p);
  EXPECT_THROW(cmd_distance(load_config(dir_ / "config.json")), InputError);
}

TEST_F(TempDir, EmptySelectionIsInputError) {
  generate::credit(dir_, 0, 80);
  auto j = nlohmann::json::parse(slurp(dir_ / "config.json"));
  j["population_a"]["filter"]["equals"] = "excellent";
  EXPECT_THROW(prepare(parse_config(j, dir_)), InputError);
}

TEST_F(TempDir, SchemasMustAgree) {
  generate::fixture(dir_);
  auto s = nlohmann::json::parse(slurp(dir_ / "fixture_schema.json"));
  s["columns"][0]["role"] = "immutable";
  write("other_schema.json", s.dump());
  auto j = nlohmann::json::parse(slurp(dir_ / "config.json"));
  j["population_b"]["schema"] = "other_schema.json";
  EXPECT_THROW(prepare(parse_config(j, dir_)), InputError);
}

TEST_F(TempDir, RecourseKeepsFixedColumns) {
  generate::credit(dir_, 2, 300);
  auto cfg = load_config(dir_ / "config.json");
  const auto j = cmd_recourse(cfg);
  const auto& sweep = j["sweep"];
  ASSERT_EQ(sweep.size(), 5u);
  EXPECT_EQ(sweep[0]["reclassified_fraction"].get<double>(), 0.0);
  EXPECT_GT(sweep[4]["mean_good_label_probability"].get<double>(),
            sweep[0]["mean_good_label_probability"].get<double>());

  // Non-actionable text in recourse_features.csv is identical at every alpha.
  const auto p = prepare(cfg);
  const auto roles = p.encoder.roles();
  const auto table = parse_csv(slurp(cfg.output_dir / "recourse_features.csv"), "recourse_features.csv");
  const std::size_t n = p.a.outcomes.size();
  ASSERT_EQ(table.rows.size(), 5 * n);
  for (std::size_t k = 0; k < n; ++k)
    for (std::size_t a = 1; a < 5; ++a)
      for (std::size_t c = 0; c < roles.size(); ++c) {
        if (roles[c] != FeatureRole::actionable) {
          EXPECT_EQ(table.rows[a * n + k][c + 2], table.rows[k][c + 2]);
        }
      }
}

TEST_F(TempDir, AlphaZeroOnlyChangesNothing) {
  generate::planted_bias(dir_, 0);
  auto cfg = load_config(dir_ / "config.json");
  cfg.alphas = {0.0};
  const auto j = cmd_recourse(cfg);
  EXPECT_EQ(j["sweep"][0]["reclassified_fraction"].get<double>(), 0.0);
  const auto changes = slurp(cfg.output_dir / "feature_changes.csv");
  EXPECT_EQ(changes, "alpha,group (partial),x\n");
  EXPECT_TRUE(j["feature_change_summary"]["empty"].get<bool>());
}

TEST(ExpandPolicy, ZerosExcludedColumns) {
  Schema s;
  ColumnSpec a{"a", ColumnKind::numeric, FeatureRole::actionable, false, false, false};
  ColumnSpec b{"b", ColumnKind::categorical, FeatureRole::immutable, true, false, true};
  ColumnSpec c{"c", ColumnKind::numeric, FeatureRole::actionable, false, false, false};
  s.columns = {a, b, c};
  auto csv = parse_csv("a,b,c\n1,x,2\n2,y,5\n", "t");
  auto raw = to_raw_table(csv, s, "t");
  const auto enc = Encoder::fit(s, {&raw});
  Policy p;
  p.weights = {1.5, -2.0};
  const auto full = expand_policy(p, enc);
  EXPECT_EQ(full.weights, (std::vector<double>{1.5, 0.0, 0.0, -2.0}));
}

TEST_F(TempDir, SimulateReportsClosedForm) {
  generate::blue_college(dir_, 0, 0.25, 40);
  auto cfg = load_config(dir_ / "config.json");
  cfg.simulation.years = 4;
  const auto j = cmd_simulate(cfg);
  ASSERT_EQ(j["rules"].size(), 3u);
  for (const auto& r : j["rules"]) {
    EXPECT_NEAR(r["wasserstein"].get<double>(), r["closed_form"].get<double>(), 1e-9);
    EXPECT_LE(r["wasserstein_spread"].get<double>(), 1e-9);
  }
  EXPECT_TRUE(j["wasserstein_increasing_in_rule"].get<bool>());
  const auto csv = slurp(cfg.output_dir / "simulate.csv");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 1 + 3 * 4);
}

TEST_F(TempDir, BlueCollegeDistanceMatchesClosedForm) {
  generate::blue_college(dir_, 5, 0.25, 40);
  const auto j = cmd_distance(load_config(dir_ / "config.json"));
  EXPECT_NEAR(j["transport"]["wasserstein"].get<double>(), std::sqrt(2 * 0.25 * 0.75), 1e-9);
}

TEST_F(TempDir, GeneratorsAreSeeded) {
  generate::credit(dir_ / "x", 4, 50);
  generate::credit(dir_ / "y", 4, 50);
  generate::credit(dir_ / "z", 5, 50);
  EXPECT_EQ(slurp(dir_ / "x" / "credit.csv"), slurp(dir_ / "y" / "credit.csv"));
  EXPECT_NE(slurp(dir_ / "x" / "credit.csv"), slurp(dir_ / "z" / "credit.csv"));
  EXPECT_THROW(generate::by_name("mystery", dir_ / "m", 0), InputError);
}

TEST_F(TempDir, ReportsAreReproducible) {
  generate::planted_bias(dir_, 1);
  auto cfg = load_config(dir_ / "config.json");
  cfg.output_dir = dir_ / "r1";
  cmd_bias(cfg);
  cmd_recourse(cfg);
  cfg.output_dir = dir_ / "r2";
  cmd_bias(cfg);
  cmd_recourse(cfg);
  for (const char* f : {"bias.json", "decomposition.csv", "mass_shares.csv", "individual_bias.csv", "recourse.json",
                        "recourse_long.csv", "recourse_features.csv", "feature_changes.csv", "coupling.csv"})
    EXPECT_EQ(slurp(dir_ / "r1" / f), slurp(dir_ / "r2" / f)) << f;
}

}  // namespace
}  // namespace otfair
