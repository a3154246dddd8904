#pragma once

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "lipbench/datasets/dataset.hpp"

namespace lipbench::experiments {

enum class ProfileMetric { kL2, kLinf, kAngular };

std::string_view to_string(ProfileMetric metric);
ProfileMetric parse_profile_metric(std::string_view name);

/// Angular distance is the angle in radians; a zero vector is taken to be
/// at pi/2 from everything (and 0 from another zero vector).
double profile_distance(std::span<const double> a, std::span<const double> b, ProfileMetric metric);

struct ProfilePoint {
  std::size_t n = 0;
  double median_distance = 0.0;
};

/// Median over test rows of the distance to the nearest of the first n
/// training rows of a seeded permutation, for every n in `sizes`
/// (ascending). Subsets nest, so medians never increase with n.
std::vector<ProfilePoint> nn_distance_profile(const Matrix& train, const Matrix& test,
                                              std::span<const std::size_t> sizes,
                                              ProfileMetric metric, std::uint64_t seed);

double median(std::vector<double> values);

struct IntrinsicDimFit {
  double slope = 0.0;      // of log r against log n
  double intercept = 0.0;
  double dimension = 0.0;  // -1 / slope
  bool valid = false;      // false when slope >= 0
};

/// Least-squares line through (log n, log r); needs >= 3 points with r > 0.
IntrinsicDimFit estimate_intrinsic_dim(std::span<const ProfilePoint> profile);

}  // namespace lipbench::experiments
