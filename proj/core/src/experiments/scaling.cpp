#include "lipbench/experiments/scaling.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

#include "lipbench/datasets/preprocess.hpp"
#include "lipbench/errors.hpp"
#include "lipbench/lipnet/certify.hpp"

namespace lipbench::experiments {

void ScalingPlan::validate() const {
  if (sizes.empty()) throw ConfigError("scaling: no sizes");
  if (!std::is_sorted(sizes.begin(), sizes.end()) ||
      std::adjacent_find(sizes.begin(), sizes.end()) != sizes.end()) {
    throw ConfigError("scaling: sizes must be strictly ascending");
  }
  if (sizes.front() < 1) throw ConfigError("scaling: sizes must be >= 1");
  if (base_epochs < 1) throw ConfigError("scaling: base epochs must be >= 1");
  if (seeds.empty()) throw ConfigError("scaling: no seeds");
  if (epsilon < 0.0) throw ConfigError("scaling: epsilon must be >= 0");
}

int ScalingPlan::epochs_for(std::size_t n) const {
  if (!epoch_scaling) return base_epochs;
  const double k = static_cast<double>(sizes.back()) / static_cast<double>(n);
  return std::max(1, static_cast<int>(std::lround(base_epochs * k)));
}

std::int64_t total_steps(const ScalingPlan& plan, std::size_t n) {
  return lipnet::steps_per_epoch(static_cast<std::int64_t>(n), plan.train.batch_size) *
         plan.epochs_for(n);
}

namespace {

ExperimentRecord run_one(const ScalingPlan& plan, const std::string& id, std::size_t n,
                         std::uint64_t seed, int epochs, const LabeledDataset& train,
                         const LabeledDataset& test) {
  const auto start = std::chrono::steady_clock::now();
  ExperimentRecord rec;
  rec.experiment = id;
  rec.n = n;
  rec.seed = seed;

  const LabeledDataset subset = subsample(train, n, seed);
  RandomSource init(RandomSource(seed).split("model"));
  lipnet::Network net = lipnet::make_mlp(plan.model, init);
  lipnet::TrainConfig cfg = plan.train;
  cfg.epochs = epochs;
  cfg.seed = RandomSource(seed).split("train").key();
  cfg.epsilon = plan.epsilon;
  try {
    lipnet::train(net, subset, cfg);
    const lipnet::InferenceModel model(net);
    const auto on_test = lipnet::evaluate(model, test, plan.epsilon);
    const auto on_train = lipnet::evaluate(model, subset, plan.epsilon);
    rec.clean_acc = on_test.accuracy;
    rec.cra = on_test.cra;
    rec.train_acc = on_train.accuracy;
    rec.train_cra = on_train.cra;
  } catch (const DivergenceError&) {
    rec.diverged = true;
  }
  rec.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return rec;
}

}  // namespace

std::vector<ExperimentRecord> run_scaling(const ScalingPlan& plan, const LabeledDataset& train,
                                          const LabeledDataset& test,
                                          const RecordCallback& on_record) {
  plan.validate();
  if (plan.sizes.back() > static_cast<std::size_t>(train.size())) {
    throw ConfigError("scaling: largest size exceeds the training set");
  }
  std::vector<ExperimentRecord> out;
  for (std::size_t n : plan.sizes) {
    for (std::uint64_t seed : plan.seeds) {
      out.push_back(run_one(plan, plan.experiment, n, seed, plan.epochs_for(n), train, test));
      if (on_record) on_record(out.back());
    }
  }
  std::stable_sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
    return a.n != b.n ? a.n < b.n : a.seed < b.seed;
  });
  return out;
}

std::vector<ExperimentRecord> run_compute_scaling(const ScalingPlan& plan,
                                                  const std::vector<int>& epoch_list,
                                                  const LabeledDataset& train,
                                                  const LabeledDataset& test,
                                                  const RecordCallback& on_record) {
  plan.validate();
  if (epoch_list.empty()) throw ConfigError("compute scaling: no epoch counts");
  const std::size_t n = plan.sizes.front();
  if (n > static_cast<std::size_t>(train.size())) {
    throw ConfigError("compute scaling: size exceeds the training set");
  }
  std::vector<ExperimentRecord> out;
  for (int epochs : epoch_list) {
    if (epochs < 1) throw ConfigError("compute scaling: epochs must be >= 1");
    for (std::uint64_t seed : plan.seeds) {
      out.push_back(run_one(plan, plan.experiment + "-e" + std::to_string(epochs), n, seed,
                            epochs, train, test));
      if (on_record) on_record(out.back());
    }
  }
  return out;
}

}  // namespace lipbench::experiments
