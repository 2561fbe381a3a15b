// Loads the bundled credit table, trains a policy without the sensitive
// columns and audits women against men directly through the library.

#include <filesystem>
#include <iostream>

#include "otfair/bias.hpp"
#include "otfair/dataset.hpp"
#include "otfair/parity.hpp"
#include "otfair/policy.hpp"
#include "otfair/recourse.hpp"
#include "otfair/transport.hpp"

int main(int argc, char** argv) {
  namespace fs = std::filesystem;
  const fs::path dir = argc > 1 ? fs::path(argv[1]) : fs::path(OTFAIR_SAMPLES_DIR) / "credit";
  try {
    const auto schema = otfair::load_schema(dir / "credit_schema.json");
    const auto data = otfair::load_csv(dir / "credit.csv", schema);
    const auto policy = otfair::train_logistic(data.policy_features(), data.labels, {});

    const auto women_raw = otfair::filter_rows(data.raw, "sex", "female");
    const auto men_raw = otfair::filter_rows(data.raw, "sex", "male");
    const auto women = otfair::encode_dataset(women_raw, data.encoder, schema);
    const auto men = otfair::encode_dataset(men_raw, data.encoder, schema);

    const auto out_w = otfair::apply_policy(policy, women.policy_features());
    const auto out_m = otfair::apply_policy(policy, men.policy_features());
    const auto mw = otfair::empirical_outcome_measure(out_w);
    const auto mm = otfair::empirical_outcome_measure(out_m);
    const auto pi = otfair::solve_exact(mw, mm, otfair::build_cost_matrix(mw, mm, 2.0));
    std::cout << "W2(women, men) = " << otfair::wasserstein_from_objective(pi.objective(), 2.0) << '\n';

    const auto metric = otfair::FeatureMetric::all_columns(data.encoded.cols());
    const auto ages = otfair::partition_by(women, {{"age", {{18, 25}, {25, 76}}}});
    const auto report = otfair::decompose(pi, women.encoded, men.encoded, ages, otfair::single_group(men.rows(), "men"),
                                          metric);
    for (std::size_t g = 0; g < ages.size(); ++g)
      std::cout << "  women " << ages.names[g] << ": group bias " << report.group_bias[g] << '\n';

    std::vector<int> pred, group;
    for (std::size_t i = 0; i < out_w.size(); ++i) pred.push_back(out_w.positive_probability(i) >= 0.5), group.push_back(0);
    for (std::size_t i = 0; i < out_m.size(); ++i) pred.push_back(out_m.positive_probability(i) >= 0.5), group.push_back(1);
    const auto di = otfair::disparate_impact_ratio(pred, group);
    std::cout << "disparate impact (men / women) = " << di.ratio << '\n';
  } catch (const otfair::Error& e) {
    std::cerr << e.what() << '\n';
    return 2;
  }
  return 0;
}
