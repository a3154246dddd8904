#pragma once

// 1-nearest-neighbour world on [0,1]^d: margin distributions, exact
// certified radii, and the box-covering sample-size experiment.

#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include "lipbench/datasets/dataset.hpp"
#include "lipbench/numerics/random.hpp"

namespace lipbench::cover {

enum class Metric { kLinf, kL2 };

double distance(std::span<const double> a, std::span<const double> b, Metric metric);

/// Grid-parity labels on [0,1]^d with a forbidden slab of half-width delta
/// around every interior grid hyperplane x_j = k * cell_width.
///
/// label(x) = (sum_j floor(x_j / w)) mod 2. Accepted samples sit at L∞
/// distance >= delta from every label change, so differently labelled
/// samples are >= 2 delta apart.
class MarginDistribution {
 public:
  /// Throws ConfigError when 2 delta >= cell_width, delta <= 0, or the
  /// acceptance probability is below 1%.
  MarginDistribution(int d, double delta, double cell_width);

  int d() const { return d_; }
  double delta() const { return delta_; }
  double cell_width() const { return cell_width_; }

  int label(std::span<const double> x) const;
  /// L∞ distance from x to the nearest interior grid hyperplane.
  double boundary_distance(std::span<const double> x) const;
  bool accepts(std::span<const double> x) const { return boundary_distance(x) >= delta_; }
  /// Exact probability that a uniform point is accepted.
  double acceptance_probability() const;

 private:
  int d_;
  double delta_;
  double cell_width_;
};

/// Rejection sampling from the uniform distribution restricted to the
/// accepted region. Labels are 0/1.
LabeledDataset sample_margin(const MarginDistribution& dist, std::size_t n, RandomSource& rng);

class OneNNModel {
 public:
  OneNNModel(Matrix points, std::vector<int> labels, Metric metric);
  static OneNNModel fit(const LabeledDataset& train, Metric metric);

  const Matrix& points() const { return points_; }
  const std::vector<int>& labels() const { return labels_; }
  Metric metric() const { return metric_; }
  bool single_class() const { return single_class_; }

 private:
  Matrix points_;
  std::vector<int> labels_;
  Metric metric_;
  bool single_class_;
};

struct NeighborQuery {
  int label;               // label of the nearest point (lowest index on ties)
  std::size_t index;
  double nearest;          // distance to that point
  double nearest_other;    // distance to the nearest point with a different label
};

NeighborQuery nn_query(const OneNNModel& model, std::span<const double> x);
int nn_predict(const OneNNModel& model, std::span<const double> x);

inline constexpr double kInfiniteRadius = std::numeric_limits<double>::infinity();

/// (d2 - d1) / 2: no point closer than this to x (same metric) changes the
/// prediction. Single-class models return kInfiniteRadius.
double nn_certified_radius(const OneNNModel& model, std::span<const double> x);

/// 37 * ceil(1/delta)^d. Throws ConfigError on overflow or bad arguments.
std::uint64_t required_samples(double delta, int d);

/// Number of boxes per axis, ceil(1/delta) (tolerant of 1/delta rounding).
std::uint64_t boxes_per_axis(double delta);

struct BoxCoverage {
  std::uint64_t box_count;
  std::uint64_t occupied;
  double occupancy;  // occupied / box_count
  std::vector<std::uint32_t> counts;
};

/// Index of the box holding x: per axis floor(x_j / delta), clamped to the
/// last box, combined in row-major order.
std::uint64_t box_index(std::span<const double> x, double delta);

BoxCoverage box_coverage(const LabeledDataset& train, double delta, int d);

struct CoverConfig {
  int d = 2;
  double delta = 0.125;
  double cell_width = 0.5;
  std::uint64_t n = 0;  // 0: required_samples(delta, d)
  int trials = 20;
  int test_per_trial = 2000;
};

struct CoverTrial {
  int trial;
  double robust_acc;  // correct and certified radius >= delta / 2
  double clean_acc;
  double occupancy;
  double train_certified;  // training points certified at delta / 2
};

struct CoverResult {
  std::uint64_t n;
  double mean_robust_acc;
  double half_width;
  double coverage_bound;  // 1 - |B| / (n e)
  std::vector<CoverTrial> trials;
};

/// Trial t uses rng.split(t) for fresh training and test draws.
CoverResult run_cover_experiment(const CoverConfig& cfg, const RandomSource& rng);

}  // namespace lipbench::cover
