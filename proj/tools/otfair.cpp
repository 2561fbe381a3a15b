#include <cstdint>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "otfair/audit.hpp"
#include "otfair/generate.hpp"

namespace {

constexpr int kInputError = 2;
constexpr int kNumericalError = 3;

struct Overrides {
  std::string config;
  std::string alphas;
  std::string rules;
  std::optional<std::uint64_t> seed;
  std::optional<double> threshold;
  std::string out;
};

std::vector<double> parse_list(const std::string& s, const char* what) {
  std::vector<double> v;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    auto x = otfair::parse_number(item);
    if (!x) throw otfair::InputError("audit_cli", std::string("bad ") + what + " value '" + item + "'");
    v.push_back(*x);
  }
  if (v.empty()) throw otfair::InputError("audit_cli", std::string("empty ") + what + " list");
  return v;
}

otfair::AuditConfig resolve(const Overrides& o) {
  auto cfg = otfair::load_config(o.config);
  if (!o.alphas.empty()) cfg.alphas = parse_list(o.alphas, "alpha");
  if (!o.rules.empty()) cfg.rules = parse_list(o.rules, "rule");
  if (o.seed) cfg.seed = *o.seed;
  if (o.threshold) cfg.decision_threshold = *o.threshold;
  if (!o.out.empty()) cfg.output_dir = o.out;
  cfg.validate();
  return cfg;
}

void add_common(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--config", o.config, "audit config (JSON)")->required()->check(CLI::ExistingFile);
  cmd->add_option("--seed", o.seed, "override the config seed");
  cmd->add_option("--out", o.out, "override the output directory");
  cmd->add_option("--threshold", o.threshold, "decision threshold for hard labels");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Optimal-transport fairness audits"};
  app.require_subcommand(1);

  Overrides o;
  auto* distance = app.add_subcommand("distance", "Wasserstein distance between the two outcome distributions");
  auto* bias = app.add_subcommand("bias", "coupling-derived individual and group bias");
  auto* recourse = app.add_subcommand("recourse", "interpolate toward coupled counterparts over an alpha grid");
  auto* simulate = app.add_subcommand("simulate", "admissions simulator");
  for (auto* c : {distance, bias, recourse, simulate}) add_common(c, o);
  recourse->add_option("--alpha", o.alphas, "comma-separated alpha grid");
  simulate->add_option("--rule", o.rules, "comma-separated acceptance rules");

  std::string kind, dir;
  std::uint64_t gen_seed = 0;
  auto* gen = app.add_subcommand("generate", "write a synthetic dataset, schema and config");
  gen->add_option("kind", kind, "dataset kind")->required()->check(CLI::IsMember(otfair::generate::kinds()));
  gen->add_option("--dir", dir, "output directory")->required();
  gen->add_option("--seed", gen_seed, "generator seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kInputError;
  }

  try {
    if (gen->parsed()) {
      otfair::generate::by_name(kind, dir, gen_seed);
      std::cout << "wrote " << kind << " to " << dir << '\n';
      return 0;
    }
    const auto cfg = resolve(o);
    if (distance->parsed()) {
      const auto j = otfair::cmd_distance(cfg);
      std::cout << "wasserstein " << otfair::format_number(j["transport"]["wasserstein"].get<double>()) << '\n';
    } else if (bias->parsed()) {
      const auto j = otfair::cmd_bias(cfg);
      std::cout << "total bias " << otfair::format_number(j["bias"]["total_bias"].get<double>()) << '\n';
    } else if (recourse->parsed()) {
      const auto j = otfair::cmd_recourse(cfg);
      for (const auto& r : j["sweep"])
        std::cout << "alpha " << otfair::format_number(r["alpha"].get<double>()) << ": mean probability "
                  << otfair::format_number(r["mean_good_label_probability"].get<double>()) << ", reclassified "
                  << otfair::format_number(r["reclassified_fraction"].get<double>()) << '\n';
    } else if (simulate->parsed()) {
      const auto j = otfair::cmd_simulate(cfg);
      for (const auto& r : j["rules"])
        std::cout << "rule " << otfair::format_number(r["rule"].get<double>()) << ": W2 "
                  << otfair::format_number(r["wasserstein"].get<double>()) << '\n';
    }
    std::cout << "reports in " << cfg.output_dir.string() << '\n';
  } catch (const otfair::NumericalError& e) {
    std::cerr << e.what() << '\n';
    return kNumericalError;
  } catch (const otfair::Error& e) {
    std::cerr << e.what() << '\n';
    return kInputError;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "[audit_cli] " << e.what() << '\n';
    return kInputError;
  }
  return 0;
}
