// nfr and cover: the two synthetic-theory experiments.
#include <chrono>
#include <cmath>
#include <fstream>
#include <ostream>

#include "commands.hpp"
#include "common.hpp"
#include "lipbench/cover/cover.hpp"
#include "lipbench/errors.hpp"
#include "lipbench/experiments/records.hpp"
#include "lipbench/hypercube/hypercube.hpp"

namespace lipbench::cli {

using experiments::ExperimentRecord;
using experiments::fixed6;

int cmd_nfr(const Args& args, std::ostream& out) {
  const auto start = std::chrono::steady_clock::now();
  CLI::App app{"No-Free-Robustness experiment on the hypercube family", "nfr"};
  Common common;
  add_common(app, common, "nfr");
  hypercube::NfrConfig cfg;
  std::string learner_name = "memorize";
  app.add_option("--n", cfg.n, "Training set size")->capture_default_str();
  app.add_option("--trials", cfg.trials, "Number of labelings drawn")->capture_default_str();
  app.add_option("--test-per-trial", cfg.test_per_trial, "Test draws per trial")->capture_default_str();
  app.add_option("--delta", cfg.delta, "Magnitude of the non-robust feature")->capture_default_str();
  app.add_option("--dimension", cfg.dimension, "Force d (0 = ceil(log2 n) + 7)")->capture_default_str();
  app.add_option("--learner", learner_name, "memorize | nonrobust | oracle")->capture_default_str();
  parse(app, args);

  hypercube::Learner learner;
  const bool oracle = learner_name == "oracle";
  if (learner_name == "memorize") {
    learner = hypercube::memorizing_learner();
  } else if (learner_name == "nonrobust") {
    learner = hypercube::nonrobust_learner();
  } else if (!oracle) {
    throw CLI::ValidationError("--learner", "unknown learner '" + learner_name + "'");
  }

  const auto dir = prepare_output(app, common);
  const RandomSource root(common.seed);
  const auto result = oracle ? hypercube::run_oracle_reference(cfg, root)
                             : hypercube::run_no_free_robustness(cfg, learner, root);
  // Reference runs on the same draws: the sign(x_d) learner's clean accuracy
  // and the oracle's adversarial accuracy.
  const auto signs = hypercube::run_no_free_robustness(cfg, hypercube::nonrobust_learner(), root);
  const auto reference = hypercube::run_oracle_reference(cfg, root);

  std::vector<ExperimentRecord> rows;
  std::vector<std::vector<std::string>> detail;
  const std::string id = "nfr-d" + std::to_string(result.d);
  for (const auto& t : result.trials) {
    ExperimentRecord r;
    r.experiment = id;
    r.n = cfg.n;
    r.seed = static_cast<std::uint64_t>(t.trial);
    r.clean_acc = t.clean_acc;
    r.cra = t.adv_acc;
    r.train_acc = t.train_acc;
    r.train_cra = t.train_adv_acc;
    rows.push_back(r);
    detail.push_back({std::to_string(cfg.n), std::to_string(result.d), std::to_string(t.trial),
                      fixed6(t.clean_acc), fixed6(t.adv_acc)});
  }
  {
    std::ofstream csv(dir / "rows.csv", std::ios::binary);
    experiments::write_records_csv(csv, rows, common.record_timing);
    std::ofstream trials(dir / "trials.csv", std::ios::binary);
    experiments::write_csv(trials, {"n", "d", "trial", "clean_acc", "adv_acc"}, detail);
  }

  auto min_over = [](const hypercube::NfrResult& r, auto field) {
    double m = 1.0;
    for (const auto& t : r.trials) m = std::min(m, t.*field);
    return m;
  };
  Json res;
  res["learner"] = learner_name;
  res["n"] = cfg.n;
  res["d"] = result.d;
  res["trials"] = cfg.trials;
  res["mean_adv_acc"] = result.mean_adv_acc;
  res["adv_half_width_95"] = result.adv_half_width;
  res["mean_clean_acc"] = result.mean_clean_acc;
  res["analytic_ceiling"] = result.analytic_ceiling;
  res["analytic_error_floor"] = 1.0 - result.analytic_ceiling;
  res["robust_accuracy_threshold"] = 0.51;
  res["below_threshold"] = result.mean_adv_acc <= 0.51;
  res["sign_learner_min_clean_acc"] = min_over(signs, &hypercube::NfrTrial::clean_acc);
  res["oracle_min_adv_acc"] = min_over(reference, &hypercube::NfrTrial::adv_acc);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  write_summary(dir, "nfr", app, res, secs);
  out << "nfr: n=" << cfg.n << " d=" << result.d << " mean adversarial accuracy "
      << fixed6(result.mean_adv_acc) << " +- " << fixed6(result.adv_half_width)
      << " (ceiling " << fixed6(result.analytic_ceiling) << ")\n";
  return 0;
}

int cmd_cover(const Args& args, std::ostream& out) {
  const auto start = std::chrono::steady_clock::now();
  CLI::App app{"1-NN robust accuracy on a margin distribution", "cover"};
  Common common;
  add_common(app, common, "cover");
  cover::CoverConfig cfg;
  cfg.cell_width = 0.0;
  app.add_option("--d", cfg.d, "Dimension")->capture_default_str();
  app.add_option("--delta", cfg.delta, "L-inf margin of the distribution")->capture_default_str();
  app.add_option("--cell", cfg.cell_width, "Grid cell width (0 = 4 * delta)")->capture_default_str();
  app.add_option("--n", cfg.n, "Training size (0 = 37 * ceil(1/delta)^d)")->capture_default_str();
  app.add_option("--trials", cfg.trials, "Trials")->capture_default_str();
  app.add_option("--test-per-trial", cfg.test_per_trial, "Test draws per trial")->capture_default_str();
  parse(app, args);
  if (cfg.cell_width == 0.0) cfg.cell_width = 4.0 * cfg.delta;

  const auto dir = prepare_output(app, common);
  const auto result = cover::run_cover_experiment(cfg, RandomSource(common.seed));

  std::vector<ExperimentRecord> rows;
  std::vector<std::vector<std::string>> detail;
  const std::string id = "cover-d" + std::to_string(cfg.d);
  for (const auto& t : result.trials) {
    ExperimentRecord r;
    r.experiment = id;
    r.n = result.n;
    r.seed = static_cast<std::uint64_t>(t.trial);
    r.clean_acc = t.clean_acc;
    r.cra = t.robust_acc;
    r.train_acc = 1.0;  // 1-NN reproduces its own training labels
    r.train_cra = t.train_certified;
    rows.push_back(r);
    detail.push_back({std::to_string(cfg.d), fixed6(cfg.delta), std::to_string(result.n),
                      std::to_string(t.trial), fixed6(t.robust_acc), fixed6(t.occupancy)});
  }
  {
    std::ofstream csv(dir / "rows.csv", std::ios::binary);
    experiments::write_records_csv(csv, rows, common.record_timing);
    std::ofstream trials(dir / "trials.csv", std::ios::binary);
    experiments::write_csv(trials, {"d", "delta", "n", "trial", "robust_acc", "occupancy"}, detail);
  }
  double occupancy = 0.0;
  for (const auto& t : result.trials) occupancy += t.occupancy;
  Json res;
  res["d"] = cfg.d;
  res["delta"] = cfg.delta;
  res["cell_width"] = cfg.cell_width;
  res["n"] = result.n;
  res["required_samples"] = cover::required_samples(cfg.delta, cfg.d);
  res["trials"] = cfg.trials;
  res["certify_radius"] = cfg.delta / 2;
  res["mean_robust_acc"] = result.mean_robust_acc;
  res["half_width_95"] = result.half_width;
  res["coverage_bound"] = result.coverage_bound;
  res["mean_occupancy"] = occupancy / static_cast<double>(result.trials.size());
  res["meets_99_percent"] = result.mean_robust_acc >= 0.99;
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  write_summary(dir, "cover", app, res, secs);
  out << "cover: d=" << cfg.d << " delta=" << cfg.delta << " n=" << result.n
      << " mean robust accuracy " << fixed6(result.mean_robust_acc) << "\n";
  return 0;
}

}  // namespace lipbench::cli
