#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "lipbench/datasets/dataset.hpp"
#include "lipbench/numerics/matrix.hpp"

namespace lipbench::smoothing {

struct SmoothingConfig {
  double sigma = 0.125;
  int samples = 1000;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Predicted class for every row of a batch.
using BatchClassifier = std::function<std::vector<int>(const Matrix&)>;

struct SmoothedPrediction {
  std::vector<int> counts;  // one per class
  int top_class = 0;        // argmax count, lowest class on ties
};

/// Votes of `base` on cfg.samples noisy copies x + N(0, sigma^2 I). The noise
/// stream is keyed by (cfg.seed, sample_id), so a sample's votes do not depend
/// on which other samples were evaluated.
SmoothedPrediction smoothed_predict(const BatchClassifier& base, std::span<const double> x,
                                    int class_count, const SmoothingConfig& cfg,
                                    std::uint64_t sample_id = 0);

/// sigma/2 (inv_norm_cdf(p1) - inv_norm_cdf(p2)) from the top two vote
/// frequencies, each clamped to [1/(m+1), m/(m+1)].
double certified_radius_estimate(std::span<const int> counts, const SmoothingConfig& cfg);

/// Same formula on given frequencies (clamped with m = cfg.samples).
double radius_from_frequencies(double p1, double p2, const SmoothingConfig& cfg);

struct SmoothedSample {
  std::size_t sample_id = 0;
  int top_class = 0;
  bool correct = false;
  double radius = 0.0;
};

/// Smoothed prediction and radius for the first `limit` rows of `data`.
std::vector<SmoothedSample> smooth_dataset(const BatchClassifier& base, const LabeledDataset& data,
                                           const SmoothingConfig& cfg, std::size_t limit);

}  // namespace lipbench::smoothing
