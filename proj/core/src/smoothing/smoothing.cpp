#include "lipbench/smoothing/smoothing.hpp"

#include <algorithm>
#include <cmath>

#include "lipbench/errors.hpp"
#include "lipbench/numerics/random.hpp"
#include "lipbench/numerics/special.hpp"

namespace lipbench::smoothing {

void SmoothingConfig::validate() const {
  if (!(sigma > 0.0) || !std::isfinite(sigma)) throw ConfigError("smoothing: sigma must be > 0");
  if (samples < 1) throw ConfigError("smoothing: samples must be >= 1");
}

SmoothedPrediction smoothed_predict(const BatchClassifier& base, std::span<const double> x,
                                    int class_count, const SmoothingConfig& cfg,
                                    std::uint64_t sample_id) {
  cfg.validate();
  if (class_count < 1) throw ConfigError("smoothing: class count must be >= 1");
  const auto dim = static_cast<Eigen::Index>(x.size());
  RandomSource rng = RandomSource(cfg.seed).split("smoothing").split(sample_id);

  Matrix noisy(cfg.samples, dim);
  for (Eigen::Index r = 0; r < noisy.rows(); ++r) {
    for (Eigen::Index j = 0; j < dim; ++j) noisy(r, j) = x[static_cast<std::size_t>(j)] + cfg.sigma * rng.normal();
  }
  const std::vector<int> votes = base(noisy);
  if (static_cast<Eigen::Index>(votes.size()) != noisy.rows()) {
    throw ShapeError("smoothing: classifier returned wrong number of predictions");
  }

  SmoothedPrediction out;
  out.counts.assign(static_cast<std::size_t>(class_count), 0);
  for (int v : votes) {
    if (v < 0 || v >= class_count) throw DomainError("smoothing: predicted class out of range");
    ++out.counts[static_cast<std::size_t>(v)];
  }
  out.top_class = static_cast<int>(std::max_element(out.counts.begin(), out.counts.end()) - out.counts.begin());
  return out;
}

double radius_from_frequencies(double p1, double p2, const SmoothingConfig& cfg) {
  cfg.validate();
  const double m = cfg.samples;
  const double lo = 1.0 / (m + 1.0);
  const double hi = m / (m + 1.0);
  p1 = std::clamp(p1, lo, hi);
  p2 = std::clamp(p2, lo, hi);
  return std::max(0.0, 0.5 * cfg.sigma * (inv_norm_cdf(p1) - inv_norm_cdf(p2)));
}

double certified_radius_estimate(std::span<const int> counts, const SmoothingConfig& cfg) {
  if (counts.empty()) throw ShapeError("smoothing: empty counts");
  long total = 0;
  for (int c : counts) {
    if (c < 0) throw DomainError("smoothing: negative count");
    total += c;
  }
  if (total != cfg.samples) throw DomainError("smoothing: counts must sum to the sample count");
  std::vector<int> sorted(counts.begin(), counts.end());
  std::sort(sorted.begin(), sorted.end(), std::greater<>());
  const double m = cfg.samples;
  const double p1 = sorted[0] / m;
  const double p2 = sorted.size() > 1 ? sorted[1] / m : 0.0;
  return radius_from_frequencies(p1, p2, cfg);
}

std::vector<SmoothedSample> smooth_dataset(const BatchClassifier& base, const LabeledDataset& data,
                                           const SmoothingConfig& cfg, std::size_t limit) {
  const std::size_t n = std::min(limit, static_cast<std::size_t>(data.size()));
  std::vector<SmoothedSample> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto row = data.features().row(static_cast<Eigen::Index>(i));
    const SmoothedPrediction pred =
        smoothed_predict(base, {row.data(), static_cast<std::size_t>(row.size())},
                         data.class_count(), cfg, i);
    out.push_back({i, pred.top_class, pred.top_class == data.labels()[i],
                   certified_radius_estimate(pred.counts, cfg)});
  }
  return out;
}

}  // namespace lipbench::smoothing
