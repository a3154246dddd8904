#include "lipbench/experiments/profile.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "lipbench/datasets/preprocess.hpp"
#include "lipbench/errors.hpp"

namespace lipbench::experiments {

std::string_view to_string(ProfileMetric metric) {
  switch (metric) {
    case ProfileMetric::kL2: return "l2";
    case ProfileMetric::kLinf: return "linf";
    case ProfileMetric::kAngular: return "angular";
  }
  return "?";
}

ProfileMetric parse_profile_metric(std::string_view name) {
  if (name == "l2") return ProfileMetric::kL2;
  if (name == "linf") return ProfileMetric::kLinf;
  if (name == "angular") return ProfileMetric::kAngular;
  throw ConfigError("unknown metric '" + std::string(name) + "' (l2, linf, angular)");
}

double profile_distance(std::span<const double> a, std::span<const double> b, ProfileMetric metric) {
  if (a.size() != b.size()) throw ShapeError("profile_distance: length mismatch");
  switch (metric) {
    case ProfileMetric::kL2: {
      double s = 0.0;
      for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
      return std::sqrt(s);
    }
    case ProfileMetric::kLinf: {
      double m = 0.0;
      for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
      return m;
    }
    case ProfileMetric::kAngular: {
      double dot = 0.0, na = 0.0, nb = 0.0;
      for (std::size_t i = 0; i < a.size(); ++i) {
        dot += a[i] * b[i];
        na += a[i] * a[i];
        nb += b[i] * b[i];
      }
      if (na == 0.0 && nb == 0.0) return 0.0;
      if (na == 0.0 || nb == 0.0) return std::numbers::pi / 2;
      return std::acos(std::clamp(dot / std::sqrt(na * nb), -1.0, 1.0));
    }
  }
  return 0.0;
}

double median(std::vector<double> values) {
  if (values.empty()) throw ShapeError("median of an empty set");
  const std::size_t mid = values.size() / 2;
  std::nth_element(values.begin(), values.begin() + mid, values.end());
  const double upper = values[mid];
  if (values.size() % 2 == 1) return upper;
  const double lower = *std::max_element(values.begin(), values.begin() + mid);
  return 0.5 * (lower + upper);
}

std::vector<ProfilePoint> nn_distance_profile(const Matrix& train, const Matrix& test,
                                              std::span<const std::size_t> sizes,
                                              ProfileMetric metric, std::uint64_t seed) {
  if (sizes.empty()) throw ConfigError("profile: no sizes");
  if (!std::is_sorted(sizes.begin(), sizes.end()) || sizes.front() < 1) {
    throw ConfigError("profile: sizes must be ascending and >= 1");
  }
  if (sizes.back() > static_cast<std::size_t>(train.rows())) {
    throw ConfigError("profile: size exceeds the training set");
  }
  if (test.rows() < 1) throw ShapeError("profile: empty test set");
  if (train.cols() != test.cols()) throw ShapeError("profile: width mismatch");

  const auto order = subsample_indices(static_cast<std::size_t>(train.rows()), sizes.back(), seed);
  const auto width = static_cast<std::size_t>(train.cols());
  std::vector<double> nearest(static_cast<std::size_t>(test.rows()),
                              std::numeric_limits<double>::infinity());
  std::vector<ProfilePoint> out;
  std::size_t added = 0;
  for (std::size_t n : sizes) {
    for (; added < n; ++added) {
      const double* p = train.row(static_cast<Eigen::Index>(order[added])).data();
      for (Eigen::Index t = 0; t < test.rows(); ++t) {
        const double d = profile_distance({p, width}, {test.row(t).data(), width}, metric);
        auto& best = nearest[static_cast<std::size_t>(t)];
        if (d < best) best = d;
      }
    }
    out.push_back({n, median(nearest)});
  }
  return out;
}

IntrinsicDimFit estimate_intrinsic_dim(std::span<const ProfilePoint> profile) {
  if (profile.size() < 3) throw DomainError("intrinsic dimension: need at least 3 points");
  const double k = static_cast<double>(profile.size());
  double mx = 0.0, my = 0.0;
  for (const auto& p : profile) {
    if (!(p.median_distance > 0.0) || p.n < 1) {
      throw DomainError("intrinsic dimension: distances and sizes must be positive");
    }
    mx += std::log(static_cast<double>(p.n));
    my += std::log(p.median_distance);
  }
  mx /= k;
  my /= k;
  double sxx = 0.0, sxy = 0.0;
  for (const auto& p : profile) {
    const double dx = std::log(static_cast<double>(p.n)) - mx;
    sxx += dx * dx;
    sxy += dx * (std::log(p.median_distance) - my);
  }
  if (sxx == 0.0) throw DomainError("intrinsic dimension: sizes must differ");
  IntrinsicDimFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  fit.valid = fit.slope < 0.0;
  fit.dimension = fit.valid ? -1.0 / fit.slope : std::numeric_limits<double>::infinity();
  return fit;
}

}  // namespace lipbench::experiments
