#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "lipbench/datasets/dataset.hpp"
#include "lipbench/experiments/records.hpp"
#include "lipbench/lipnet/network.hpp"
#include "lipbench/lipnet/train.hpp"

namespace lipbench::experiments {

struct ScalingPlan {
  std::string experiment = "scale";
  std::vector<std::size_t> sizes;  // ascending
  int base_epochs = 40;            // epochs at the largest size
  bool epoch_scaling = true;       // size max/k trains for base_epochs * k
  lipnet::MlpSpec model;
  lipnet::TrainConfig train;       // epochs and seed are set per run
  double epsilon = lipnet::kDefaultEpsilon;
  std::vector<std::uint64_t> seeds = {0};

  void validate() const;
  /// round(base_epochs * max_size / n) with scaling on, base_epochs otherwise.
  int epochs_for(std::size_t n) const;
};

/// Called after every finished (n, seed) run.
using RecordCallback = std::function<void(const ExperimentRecord&)>;

/// For every (n, seed): the seed's nested subsample of size n, a fresh
/// network initialised from the seed, training for epochs_for(n), then
/// accuracy and CRA on `test` and on the (unaugmented) subsample. A
/// diverged run yields a row flagged `diverged` with zero metrics and the
/// loop continues. Rows are ordered by (n, seed).
std::vector<ExperimentRecord> run_scaling(const ScalingPlan& plan, const LabeledDataset& train,
                                          const LabeledDataset& test,
                                          const RecordCallback& on_record = {});

/// Fixed n = plan.sizes.front(), one run per (epochs, seed). Experiment ids
/// are "<plan.experiment>-e<epochs>".
std::vector<ExperimentRecord> run_compute_scaling(const ScalingPlan& plan,
                                                  const std::vector<int>& epoch_list,
                                                  const LabeledDataset& train,
                                                  const LabeledDataset& test,
                                                  const RecordCallback& on_record = {});

/// Total optimizer steps of one (n) run under the plan.
std::int64_t total_steps(const ScalingPlan& plan, std::size_t n);

}  // namespace lipbench::experiments
