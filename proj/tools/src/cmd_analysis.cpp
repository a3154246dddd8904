// pca, smooth and nndist.
#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>
#include <ostream>

#include "commands.hpp"
#include "common.hpp"
#include "lipbench/cover/cover.hpp"
#include "lipbench/datasets/preprocess.hpp"
#include "lipbench/errors.hpp"
#include "lipbench/experiments/plot.hpp"
#include "lipbench/experiments/profile.hpp"
#include "lipbench/experiments/records.hpp"
#include "lipbench/experiments/scaling.hpp"
#include "lipbench/lipnet/certify.hpp"
#include "lipbench/pca/pca.hpp"
#include "lipbench/smoothing/smoothing.hpp"

namespace lipbench::cli {

using experiments::fixed6;

namespace {

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

}  // namespace

int cmd_pca(const Args& args, std::ostream& out) {
  const auto start = std::chrono::steady_clock::now();
  CLI::App app{"Variance explained by component ranges, projected datasets, optional training", "pca"};
  Common common;
  add_common(app, common, "pca");
  ModelOptions model;
  std::string data_name = "cifar10";
  std::vector<std::string> ranges = {"1-16", "1-512", "513-3072", "2049-3072", "1-16,513-3072"};
  std::size_t fit_n = 0;
  bool write_datasets = false;
  model.train.epochs = 0;
  app.add_option("--data", data_name, "mnist | cifar10")->capture_default_str();
  app.add_option("--ranges", ranges, "Component sets separated by ';', e.g. 1-16;1-16,513-3072")
      ->delimiter(';')
      ->capture_default_str();
  app.add_option("--fit-n", fit_n, "Fit on a subsample of this size (0 = whole training set)")
      ->capture_default_str();
  app.add_flag("--write-datasets", write_datasets, "Save projected train/test sets (.lbds cache)");
  app.add_option("--epochs", model.train.epochs, "Train an MLP on every projection (0 = skip)")
      ->capture_default_str();
  model.add(app, false);
  parse(app, args);

  const ImageData data = load_image_data(data_name, common.data_root);
  const int dim = static_cast<int>(data.train.dim());
  std::vector<pca::IndexSet> sets;
  for (const auto& r : ranges) sets.push_back(pca::parse_index_set(r, dim));
  const auto dir = prepare_output(app, common);

  const LabeledDataset fit_data =
      fit_n == 0 ? data.train : subsample(data.train, fit_n, common.seed);
  const pca::PcaModel fitted = pca::fit_pca(fit_data.features());
  std::vector<std::vector<std::string>> table;
  Json fractions = Json::array();
  for (std::size_t i = 0; i < sets.size(); ++i) {
    const double frac = pca::variance_fraction(fitted, sets[i]);
    table.push_back({"\"" + pca::format_index_set(sets[i]) + "\"", std::to_string(sets[i].size()),
                     fixed6(frac)});
    fractions.push_back({{"range", pca::format_index_set(sets[i])},
                         {"components", sets[i].size()},
                         {"variance_fraction", frac}});
    out << "pca: " << pca::format_index_set(sets[i]) << " variance fraction " << fixed6(frac) << "\n";
  }
  {
    std::ofstream csv(dir / "rows.csv", std::ios::binary);
    experiments::write_csv(csv, {"range", "components", "variance_fraction"}, table);
  }

  Json res;
  res["data"] = data_name;
  res["dimension"] = dim;
  res["fit_samples"] = fit_data.size();
  res["variance"] = fractions;
  int code = 0;
  if (write_datasets || model.train.epochs > 0) {
    if (model.train.epochs > 0) model.finish(data.train);
    const auto pairs = pca::build_pca_datasets(fitted, data.train, data.test, sets);
    std::vector<experiments::ExperimentRecord> records;
    for (std::size_t i = 0; i < pairs.size(); ++i) {
      if (write_datasets) {
        std::ofstream tr(dir / ("projection_" + std::to_string(i + 1) + "_train.lbds"), std::ios::binary);
        write_cache(tr, pairs[i].train);
        std::ofstream te(dir / ("projection_" + std::to_string(i + 1) + "_test.lbds"), std::ios::binary);
        write_cache(te, pairs[i].test);
      }
      if (model.train.epochs > 0) {
        experiments::ScalingPlan plan;
        plan.experiment = "pca-" + pca::format_index_set(pairs[i].set);
        plan.sizes = {static_cast<std::size_t>(pairs[i].train.size())};
        plan.base_epochs = model.train.epochs;
        plan.model = model.mlp;
        plan.train = model.train;
        plan.epsilon = model.train.epsilon;
        plan.seeds = {common.seed};
        auto rows = experiments::run_scaling(plan, pairs[i].train, pairs[i].test);
        for (auto& r : rows) {
          std::replace(r.experiment.begin(), r.experiment.end(), ',', '+');
          if (r.diverged) code = 3;
          records.push_back(r);
        }
      }
    }
    if (model.train.epochs > 0) {
      std::ofstream csv(dir / "records.csv", std::ios::binary);
      experiments::write_records_csv(csv, records, common.record_timing);
      Json trained = Json::array();
      for (const auto& r : records) {
        trained.push_back({{"experiment", r.experiment}, {"test_acc", r.clean_acc}, {"test_cra", r.cra},
                           {"diverged", r.diverged}});
      }
      res["training"] = trained;
    }
  }
  write_summary(dir, "pca", app, res, seconds_since(start));
  return code;
}

namespace {

// 1-NN (L2) over many query rows at once: |a|^2 - 2 a.b + |b|^2.
smoothing::BatchClassifier nn_batch_classifier(const LabeledDataset& train) {
  auto points = std::make_shared<Matrix>(train.features());
  auto norms = std::make_shared<Vector>(points->rowwise().squaredNorm());
  auto labels = std::make_shared<std::vector<int>>(train.labels());
  return [points, norms, labels](const Matrix& q) {
    Matrix d = -2.0 * (q * points->transpose());
    d.rowwise() += norms->transpose();
    std::vector<int> out(static_cast<std::size_t>(q.rows()));
    for (Eigen::Index i = 0; i < q.rows(); ++i) {
      Eigen::Index arg = 0;
      d.row(i).minCoeff(&arg);
      out[static_cast<std::size_t>(i)] = (*labels)[static_cast<std::size_t>(arg)];
    }
    return out;
  };
}

smoothing::BatchClassifier net_batch_classifier(const lipnet::Network& net) {
  auto model = std::make_shared<lipnet::InferenceModel>(net);
  return [model](const Matrix& q) {
    const Matrix s = model->forward(q);
    std::vector<int> out(static_cast<std::size_t>(s.rows()));
    for (Eigen::Index i = 0; i < s.rows(); ++i) {
      out[static_cast<std::size_t>(i)] =
          lipnet::top_class({s.row(i).data(), static_cast<std::size_t>(s.cols())});
    }
    return out;
  };
}

}  // namespace

int cmd_smooth(const Args& args, std::ostream& out) {
  const auto start = std::chrono::steady_clock::now();
  CLI::App app{"Randomized-smoothing predictions and radius estimates", "smooth"};
  Common common;
  add_common(app, common, "smooth");
  smoothing::SmoothingConfig cfg;
  std::string data_name = "mnist";
  std::string base = "nn";
  std::string model_path;
  std::size_t train_n = 10000;
  std::size_t count = 100;
  double epsilon = lipnet::kDefaultEpsilon;
  app.add_option("--data", data_name, "mnist | cifar10")->capture_default_str();
  app.add_option("--base", base, "nn (1-NN on a training subsample) | net (checkpoint)")
      ->capture_default_str();
  app.add_option("--model", model_path, "Checkpoint written by `train` (base = net)");
  app.add_option("--train-n", train_n, "Training points for the 1-NN base")->capture_default_str();
  app.add_option("--count", count, "Test samples to smooth")->capture_default_str();
  app.add_option("--sigma", cfg.sigma, "Noise standard deviation")->capture_default_str();
  app.add_option("--samples", cfg.samples, "Noise draws per test sample")->capture_default_str();
  app.add_option("--epsilon", epsilon, "Radius at which certified accuracy is reported")
      ->capture_default_str();
  parse(app, args);
  cfg.seed = common.seed;
  cfg.validate();

  const ImageData data = load_image_data(data_name, common.data_root);
  smoothing::BatchClassifier classifier;
  if (base == "nn") {
    classifier = nn_batch_classifier(subsample(data.train, std::min<std::size_t>(train_n, data.train.size()),
                                               common.seed));
  } else if (base == "net") {
    if (model_path.empty()) throw CLI::ValidationError("--model", "required when --base net");
    std::ifstream in(model_path, std::ios::binary);
    if (!in) throw InputError("cannot open checkpoint " + model_path);
    const lipnet::Network net = lipnet::load_checkpoint(in);
    if (net.input_dim() != data.test.dim()) throw ShapeError("checkpoint input width does not match the data");
    classifier = net_batch_classifier(net);
  } else {
    throw CLI::ValidationError("--base", "unknown base classifier '" + base + "'");
  }
  const auto dir = prepare_output(app, common);

  const auto samples = smoothing::smooth_dataset(classifier, data.test, cfg, count);
  std::vector<std::vector<std::string>> table;
  double correct = 0, certified = 0, radius_sum = 0;
  for (const auto& s : samples) {
    table.push_back({std::to_string(s.sample_id), std::to_string(s.top_class), s.correct ? "1" : "0",
                     fixed6(s.radius)});
    correct += s.correct;
    certified += s.correct && s.radius >= epsilon;
    radius_sum += s.radius;
  }
  {
    std::ofstream csv(dir / "rows.csv", std::ios::binary);
    experiments::write_csv(csv, {"sample_id", "top_class", "correct", "radius"}, table);
  }
  const double k = std::max<double>(1.0, static_cast<double>(samples.size()));
  Json res;
  res["base"] = base;
  res["sigma"] = cfg.sigma;
  res["samples"] = cfg.samples;
  res["count"] = samples.size();
  res["smoothed_accuracy"] = correct / k;
  res["mean_radius"] = radius_sum / k;
  res["epsilon"] = epsilon;
  res["certified_accuracy_at_epsilon"] = certified / k;
  write_summary(dir, "smooth", app, res, seconds_since(start));
  out << "smooth: accuracy " << fixed6(correct / k) << ", radius >= " << fixed6(epsilon) << " on "
      << fixed6(certified / k) << "\n";
  return 0;
}

int cmd_nndist(const Args& args, std::ostream& out) {
  const auto start = std::chrono::steady_clock::now();
  CLI::App app{"Median nearest-neighbour distance against training size", "nndist"};
  Common common;
  add_common(app, common, "nndist");
  std::string data_name = "mnist";
  std::vector<std::size_t> sizes = {250, 500, 1000, 2000, 4000, 8000};
  std::size_t test_count = 200;
  int uniform_dim = 8;
  std::string metric_name = "l2";
  app.add_option("--data", data_name, "mnist | cifar10 | uniform")->capture_default_str();
  app.add_option("--sizes", sizes, "Training sizes, ascending")->delimiter(',')->capture_default_str();
  app.add_option("--test-count", test_count, "Test points (median over these)")->capture_default_str();
  app.add_option("--dim", uniform_dim, "Dimension of the uniform [0,1]^d data")->capture_default_str();
  app.add_option("--metric", metric_name, "l2 | linf | angular")->capture_default_str();
  parse(app, args);
  const auto metric = experiments::parse_profile_metric(metric_name);
  if (sizes.empty()) throw CLI::ValidationError("--sizes", "need at least one size");

  Matrix train, test;
  if (data_name == "uniform") {
    if (uniform_dim < 1) throw CLI::ValidationError("--dim", "must be >= 1");
    RandomSource rng = RandomSource(common.seed).split("uniform");
    train.resize(static_cast<Eigen::Index>(sizes.back()), uniform_dim);
    test.resize(static_cast<Eigen::Index>(test_count), uniform_dim);
    for (Eigen::Index i = 0; i < train.size(); ++i) train.data()[i] = rng.uniform();
    for (Eigen::Index i = 0; i < test.size(); ++i) test.data()[i] = rng.uniform();
  } else {
    const ImageData data = load_image_data(data_name, common.data_root);
    train = data.train.features();
    const auto idx = subsample_indices(static_cast<std::size_t>(data.test.size()),
                                       std::min<std::size_t>(test_count, data.test.size()),
                                       common.seed);
    test = data.test.select(idx).features();
  }
  const auto dir = prepare_output(app, common);
  const auto profile = experiments::nn_distance_profile(train, test, sizes, metric, common.seed);

  std::vector<std::vector<std::string>> table;
  experiments::Series series{"median distance", {}, {}};
  for (const auto& p : profile) {
    table.push_back({std::to_string(p.n), fixed6(p.median_distance)});
    series.x.push_back(static_cast<double>(p.n));
    series.y.push_back(p.median_distance);
  }
  {
    std::ofstream csv(dir / "rows.csv", std::ios::binary);
    experiments::write_csv(csv, {"n", "median_distance"}, table);
  }
  Json res;
  res["data"] = data_name;
  res["metric"] = metric_name;
  res["sizes"] = series.x;
  res["median_distance"] = series.y;
  if (profile.size() >= 3 && profile.back().median_distance > 0.0) {
    const auto fit = experiments::estimate_intrinsic_dim(profile);
    res["slope"] = fit.slope;
    res["intercept"] = fit.intercept;
    res["fit_valid"] = fit.valid;
    if (fit.valid) res["intrinsic_dimension"] = fit.dimension;
    out << "nndist: slope " << fit.slope << ", intrinsic dimension "
        << (fit.valid ? std::to_string(fit.dimension) : "n/a") << "\n";
  }
  write_summary(dir, "nndist", app, res, seconds_since(start));
  experiments::ChartSpec chart;
  chart.title = "Median 1-NN distance (" + metric_name + ")";
  chart.x_label = "training samples";
  chart.y_label = "median distance";
  write_text(dir / "plot.svg", experiments::render_line_chart(chart, {series}));
  return 0;
}

}  // namespace lipbench::cli
