#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "lipbench/datasets/dataset.hpp"
#include "lipbench/datasets/preprocess.hpp"
#include "lipbench/lipnet/certify.hpp"
#include "lipbench/lipnet/loss.hpp"
#include "lipbench/lipnet/network.hpp"

namespace lipbench::lipnet {

/// Linear warm-up from peak/25 to peak over the first 10% of steps, then
/// linear decay to peak/1e4 at the final step.
class OneCycleSchedule {
 public:
  OneCycleSchedule(double peak, std::int64_t total_steps);

  double operator()(std::int64_t step) const;
  std::int64_t warmup_steps() const { return warmup_; }
  std::int64_t total_steps() const { return total_; }

  static constexpr double kWarmupFraction = 0.1;
  static constexpr double kStartDivisor = 25.0;
  static constexpr double kEndDivisor = 1e4;

 private:
  double peak_;
  std::int64_t total_;
  std::int64_t warmup_;
};

struct TrainConfig {
  double peak_lr = 0.1;
  int epochs = 10;
  int batch_size = 256;
  double momentum = 0.9;
  LossSpec loss;
  AugmentConfig augment;
  // Std of Gaussian noise added to training inputs (0 = off).
  double input_noise = 0.0;
  double epsilon = kDefaultEpsilon;
  std::uint64_t seed = 0;

  void validate() const;
};

std::int64_t steps_per_epoch(std::int64_t n, int batch_size);

struct EpochStats {
  int epoch = 0;  // 1-based
  double loss = 0.0;
  double accuracy = 0.0;  // running, on the (augmented) training batches
  double cra = 0.0;
  double last_lr = 0.0;
};

/// Called after every epoch; returning false stops training early.
using EpochCallback = std::function<bool(const EpochStats&, const Network&)>;

/// Nesterov SGD (v <- mu v + g; p <- p - lr (g + mu v)) on mean batch loss.
/// Every step refreshes each CPL layer's power vector by one iteration.
/// Throws DivergenceError on a non-finite loss or parameter.
std::vector<EpochStats> train(Network& net, const LabeledDataset& data, const TrainConfig& cfg,
                              const EpochCallback& on_epoch = {});

/// 10^-3, 10^-2.5, ..., 10^0.
std::vector<double> default_lr_grid();

struct LrSearchResult {
  double best_lr = 0.0;
  std::vector<double> grid;
  std::vector<double> validation_cra;  // -1 marks a diverged run
};

/// Trains a fresh network (from `make_net`) for every grid value and keeps
/// the one with the highest validation CRA; ties go to the smaller rate.
LrSearchResult select_peak_lr(const std::function<Network()>& make_net,
                              const LabeledDataset& train_data,
                              const LabeledDataset& validation, const TrainConfig& cfg,
                              std::span<const double> grid);

}  // namespace lipbench::lipnet
