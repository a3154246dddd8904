// train and scale: Lipschitz MLP training runs on image data.
#include <chrono>
#include <cmath>
#include <fstream>
#include <map>
#include <ostream>

#include "commands.hpp"
#include "common.hpp"
#include "lipbench/datasets/preprocess.hpp"
#include "lipbench/errors.hpp"
#include "lipbench/experiments/plot.hpp"
#include "lipbench/experiments/records.hpp"
#include "lipbench/experiments/scaling.hpp"
#include "lipbench/lipnet/certify.hpp"
#include "lipbench/pca/pca.hpp"

namespace lipbench::cli {

using experiments::ExperimentRecord;
using experiments::fixed6;

namespace {

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

void write_history(const std::filesystem::path& path, const std::vector<lipnet::EpochStats>& h) {
  std::vector<std::vector<std::string>> rows;
  for (const auto& e : h) {
    rows.push_back({std::to_string(e.epoch), fixed6(e.loss), fixed6(e.accuracy), fixed6(e.cra),
                    fixed6(e.last_lr)});
  }
  std::ofstream out(path, std::ios::binary);
  experiments::write_csv(out, {"epoch", "loss", "batch_acc", "batch_cra", "lr"}, rows);
}

void write_records(const std::filesystem::path& path, const std::vector<ExperimentRecord>& rows,
                   bool timing) {
  std::ofstream out(path, std::ios::binary);
  experiments::write_records_csv(out, rows, timing);
}

}  // namespace

int cmd_train(const Args& args, std::ostream& out) {
  const auto start = std::chrono::steady_clock::now();
  CLI::App app{"Train one Lipschitz MLP and report accuracy and certified robust accuracy", "train"};
  Common common;
  add_common(app, common, "train");
  ModelOptions model;
  std::string data_name = "mnist";
  std::size_t n = 0;
  std::string ranges;
  bool lr_search = false;
  app.add_option("--data", data_name, "mnist | cifar10")->capture_default_str();
  app.add_option("--n", n, "Training subsample size (0 = all)")->capture_default_str();
  app.add_option("--ranges", ranges, "Train on the PCA projection onto these components")
      ->capture_default_str();
  app.add_flag("--lr-search", lr_search,
               "Pick the peak lr from 1e-3..1 (x sqrt 10) by CRA on a held-out fifth");
  model.add(app, true);
  parse(app, args);

  ImageData data = load_image_data(data_name, common.data_root);
  if (!ranges.empty()) {
    const pca::IndexSet set = pca::parse_index_set(ranges, static_cast<int>(data.train.dim()));
    const std::vector<pca::IndexSet> sets{set};
    auto projected = pca::build_pca_datasets(data.train, data.test, sets);
    data.train = std::move(projected[0].train);
    data.test = std::move(projected[0].test);
  }
  model.finish(data.train);
  const auto dir = prepare_output(app, common);

  const std::size_t size = n == 0 ? static_cast<std::size_t>(data.train.size()) : n;
  const LabeledDataset subset = subsample(data.train, size, common.seed);
  const RandomSource root(common.seed);
  model.train.seed = root.split("train").key();

  Json res;
  if (lr_search) {
    const std::size_t held = std::max<std::size_t>(1, size / 5);
    if (held >= size) throw ConfigError("--lr-search needs at least 2 training samples");
    std::vector<std::size_t> fit_idx, val_idx;
    for (std::size_t i = 0; i < size; ++i) (i < size - held ? fit_idx : val_idx).push_back(i);
    const auto grid = lipnet::default_lr_grid();
    const auto search = lipnet::select_peak_lr(
        [&] {
          RandomSource init = root.split("model");
          return lipnet::make_mlp(model.mlp, init);
        },
        subset.select(fit_idx), subset.select(val_idx), model.train, grid);
    model.train.peak_lr = search.best_lr;
    res["lr_grid"] = search.grid;
    res["lr_validation_cra"] = search.validation_cra;
    out << "train: selected peak lr " << search.best_lr << "\n";
  }

  RandomSource init = root.split("model");
  lipnet::Network net = lipnet::make_mlp(model.mlp, init);
  std::vector<lipnet::EpochStats> history;
  ExperimentRecord rec;
  rec.experiment = "train";
  rec.n = size;
  rec.seed = common.seed;
  int code = 0;
  try {
    lipnet::train(net, subset, model.train, [&](const lipnet::EpochStats& s, const lipnet::Network&) {
      history.push_back(s);
      return true;
    });
    const lipnet::InferenceModel inference(net);
    const auto test_eval = lipnet::evaluate(inference, data.test, model.train.epsilon);
    const auto train_eval = lipnet::evaluate(inference, subset, model.train.epsilon);
    rec.clean_acc = test_eval.accuracy;
    rec.cra = test_eval.cra;
    rec.train_acc = train_eval.accuracy;
    rec.train_cra = train_eval.cra;
    std::ofstream ckpt(dir / "model.lnet", std::ios::binary);
    lipnet::save_checkpoint(ckpt, net);
    res["status"] = "ok";
  } catch (const DivergenceError& e) {
    rec.diverged = true;
    res["status"] = "diverged";
    res["error"] = e.what();
    code = 3;
  }
  rec.wall_seconds = seconds_since(start);
  write_records(dir / "rows.csv", {rec}, common.record_timing);
  write_history(dir / "history.csv", history);

  res["model"] = model.to_json();
  res["n"] = size;
  res["epochs"] = model.train.epochs;
  res["peak_lr"] = model.train.peak_lr;
  res["test_acc"] = rec.clean_acc;
  res["test_cra"] = rec.cra;
  res["train_acc"] = rec.train_acc;
  res["train_cra"] = rec.train_cra;
  res["cra_gap"] = rec.train_cra - rec.cra;
  write_summary(dir, "train", app, res, seconds_since(start));
  out << "train: n=" << size << " test acc " << fixed6(rec.clean_acc) << " cra " << fixed6(rec.cra)
      << " | train acc " << fixed6(rec.train_acc) << " cra " << fixed6(rec.train_cra)
      << (rec.diverged ? " (diverged)" : "") << "\n";
  return code;
}

int cmd_scale(const Args& args, std::ostream& out) {
  const auto start = std::chrono::steady_clock::now();
  CLI::App app{"Data (or compute) scaling of certified robust accuracy", "scale"};
  Common common;
  add_common(app, common, "scale");
  ModelOptions model;
  experiments::ScalingPlan plan;
  plan.sizes = {512, 2048, 8192};
  plan.seeds = {0, 1, 2, 3, 4};
  std::string data_name = "mnist";
  std::vector<int> compute_epochs;
  app.add_option("--data", data_name, "mnist | cifar10")->capture_default_str();
  app.add_option("--sizes", plan.sizes, "Training sizes, ascending")->delimiter(',')->capture_default_str();
  app.add_option("--seeds", plan.seeds, "Seeds; each seed fixes nested subsets and init")
      ->delimiter(',')
      ->capture_default_str();
  app.add_option("--base-epochs", plan.base_epochs, "Epochs at the largest size")->capture_default_str();
  app.add_flag("--epoch-scaling,!--no-epoch-scaling", plan.epoch_scaling,
               "Multiply epochs by k when the size is 1/k of the largest")
      ->capture_default_str();
  app.add_option("--compute-epochs", compute_epochs,
                 "Compute scaling at the first size with these epoch counts instead")
      ->delimiter(',');
  model.add(app, false);
  parse(app, args);

  const ImageData data = load_image_data(data_name, common.data_root);
  model.finish(data.train);
  plan.model = model.mlp;
  plan.train = model.train;
  plan.epsilon = model.train.epsilon;
  plan.experiment = "scale-" + data_name;
  for (auto& s : plan.seeds) s += common.seed;  // --seed shifts the whole seed list
  plan.validate();
  const auto dir = prepare_output(app, common);

  std::vector<ExperimentRecord> partial;
  const auto progress = [&](const ExperimentRecord& r) {
    partial.push_back(r);
    out << "  " << r.experiment << " n=" << r.n << " seed=" << r.seed << " cra " << fixed6(r.cra)
        << " acc " << fixed6(r.clean_acc) << " (" << fixed6(r.wall_seconds) << " s)"
        << (r.diverged ? " diverged" : "") << "\n";
    out.flush();
    write_records(dir / "rows.csv", partial, common.record_timing);
  };
  const bool compute = !compute_epochs.empty();
  const auto rows = compute ? experiments::run_compute_scaling(plan, compute_epochs, data.train,
                                                               data.test, progress)
                            : experiments::run_scaling(plan, data.train, data.test, progress);
  write_records(dir / "rows.csv", rows, common.record_timing);

  // Per-seed curves over the x axis (size or epochs).
  std::map<std::uint64_t, experiments::Series> by_seed;
  std::map<double, std::pair<double, int>> mean;
  bool any_diverged = false;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& r = rows[i];
    any_diverged |= r.diverged;
    const double x = compute ? compute_epochs[i / plan.seeds.size()] : static_cast<double>(r.n);
    auto& s = by_seed[r.seed];
    s.name = "seed " + std::to_string(r.seed);
    s.x.push_back(x);
    s.y.push_back(r.diverged ? NAN : r.cra);
    mean[x].first += r.cra;
    mean[x].second += 1;
  }
  Json res;
  Json seeds = Json::array();
  int increasing = 0;
  std::vector<experiments::Series> series;
  for (auto& [seed, s] : by_seed) {
    bool strict = s.y.size() >= 2;
    for (std::size_t i = 1; i < s.y.size(); ++i) strict = strict && s.y[i] > s.y[i - 1];
    increasing += strict;
    seeds.push_back({{"seed", seed}, {"cra", s.y}, {"strictly_increasing", strict}});
    series.push_back(s);
  }
  experiments::Series avg{"mean", {}, {}};
  for (const auto& [x, acc] : mean) {
    avg.x.push_back(x);
    avg.y.push_back(acc.first / acc.second);
  }
  series.push_back(avg);
  res["mode"] = compute ? "compute" : "data";
  res["model"] = model.to_json();
  res["x"] = avg.x;
  res["mean_cra"] = avg.y;
  res["per_seed"] = seeds;
  res["seeds_strictly_increasing"] = increasing;
  if (!compute) {
    Json epochs = Json::array();
    Json steps = Json::array();
    for (std::size_t n : plan.sizes) {
      epochs.push_back(plan.epochs_for(n));
      steps.push_back(experiments::total_steps(plan, n));
    }
    res["epochs"] = epochs;
    res["total_steps"] = steps;
  }
  Json timing = Json::array();
  for (const auto& r : rows) timing.push_back(r.wall_seconds);
  res["run_seconds"] = timing;
  res["any_diverged"] = any_diverged;
  write_summary(dir, "scale", app, res, seconds_since(start));

  experiments::ChartSpec chart;
  chart.title = compute ? "Certified robust accuracy vs epochs" : "Certified robust accuracy vs n";
  chart.x_label = compute ? "epochs" : "training samples";
  chart.y_label = "CRA";
  write_text(dir / "plot.svg", experiments::render_line_chart(chart, series));
  out << "scale: " << increasing << "/" << by_seed.size() << " seeds strictly increasing\n";
  return any_diverged ? 3 : 0;
}

}  // namespace lipbench::cli
