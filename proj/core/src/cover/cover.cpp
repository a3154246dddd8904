#include "lipbench/cover/cover.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "lipbench/errors.hpp"

namespace lipbench::cover {
namespace {

// Largest k with k * w < 1.
int interior_lines(double w) {
  int k = static_cast<int>(std::floor(1.0 / w));
  while (k > 0 && k * w >= 1.0) --k;
  return k;
}

std::span<const double> row_span(const Matrix& m, Eigen::Index i) {
  return {m.row(i).data(), static_cast<std::size_t>(m.cols())};
}

}  // namespace

double distance(std::span<const double> a, std::span<const double> b, Metric metric) {
  if (a.size() != b.size()) throw ShapeError("distance: length mismatch");
  double acc = 0.0;
  if (metric == Metric::kLinf) {
    for (std::size_t i = 0; i < a.size(); ++i) acc = std::max(acc, std::abs(a[i] - b[i]));
    return acc;
  }
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double diff = a[i] - b[i];
    acc += diff * diff;
  }
  return std::sqrt(acc);
}

MarginDistribution::MarginDistribution(int d, double delta, double cell_width)
    : d_(d), delta_(delta), cell_width_(cell_width) {
  if (d < 1) throw ConfigError("margin distribution: d must be >= 1");
  if (!(delta > 0.0)) throw ConfigError("margin distribution: delta must be positive");
  if (!(cell_width > 0.0)) throw ConfigError("margin distribution: cell width must be positive");
  if (2.0 * delta >= cell_width) {
    throw ConfigError("margin distribution: need 2*delta < cell width (got delta = " +
                      std::to_string(delta) + ", width = " + std::to_string(cell_width) + ")");
  }
  if (acceptance_probability() < 0.01) {
    throw ConfigError("margin distribution: acceptance probability below 1%");
  }
}

int MarginDistribution::label(std::span<const double> x) const {
  long cells = 0;
  for (double v : x) cells += static_cast<long>(std::floor(v / cell_width_));
  return static_cast<int>(((cells % 2) + 2) % 2);
}

double MarginDistribution::boundary_distance(std::span<const double> x) const {
  const int lines = interior_lines(cell_width_);
  if (lines == 0) return std::numeric_limits<double>::infinity();
  double best = std::numeric_limits<double>::infinity();
  for (double t : x) {
    const double k = std::clamp(std::round(t / cell_width_), 1.0, static_cast<double>(lines));
    best = std::min(best, std::abs(t - k * cell_width_));
  }
  return best;
}

double MarginDistribution::acceptance_probability() const {
  const int lines = interior_lines(cell_width_);
  double forbidden = 0.0;
  for (int k = 1; k <= lines; ++k) {
    const double c = k * cell_width_;
    forbidden += std::min(c + delta_, 1.0) - std::max(c - delta_, 0.0);
  }
  return std::pow(std::max(0.0, 1.0 - forbidden), d_);
}

LabeledDataset sample_margin(const MarginDistribution& dist, std::size_t n, RandomSource& rng) {
  if (n < 1) throw ConfigError("sample_margin: n must be >= 1");
  const int d = dist.d();
  Matrix x(static_cast<Eigen::Index>(n), d);
  std::vector<int> labels(n);
  std::vector<double> candidate(static_cast<std::size_t>(d));
  for (std::size_t i = 0; i < n; ++i) {
    do {
      for (auto& v : candidate) v = rng.uniform();
    } while (!dist.accepts(candidate));
    for (int j = 0; j < d; ++j) x(static_cast<Eigen::Index>(i), j) = candidate[static_cast<std::size_t>(j)];
    labels[i] = dist.label(candidate);
  }
  return LabeledDataset::from_vectors(std::move(x), std::move(labels), 2);
}

OneNNModel::OneNNModel(Matrix points, std::vector<int> labels, Metric metric)
    : points_(std::move(points)), labels_(std::move(labels)), metric_(metric) {
  if (points_.rows() < 1) throw ShapeError("OneNNModel: needs at least one point");
  if (static_cast<Eigen::Index>(labels_.size()) != points_.rows()) {
    throw ShapeError("OneNNModel: labels do not align with points");
  }
  single_class_ = std::all_of(labels_.begin(), labels_.end(),
                              [&](int y) { return y == labels_.front(); });
}

OneNNModel OneNNModel::fit(const LabeledDataset& train, Metric metric) {
  return OneNNModel(train.features(), train.labels(), metric);
}

NeighborQuery nn_query(const OneNNModel& model, std::span<const double> x) {
  const Matrix& pts = model.points();
  if (static_cast<Eigen::Index>(x.size()) != pts.cols()) throw ShapeError("nn_query: width mismatch");
  std::vector<double> dist(static_cast<std::size_t>(pts.rows()));
  NeighborQuery q{model.labels()[0], 0, std::numeric_limits<double>::infinity(),
                  std::numeric_limits<double>::infinity()};
  for (Eigen::Index i = 0; i < pts.rows(); ++i) {
    const double di = distance(row_span(pts, i), x, model.metric());
    dist[static_cast<std::size_t>(i)] = di;
    if (di < q.nearest) {
      q.nearest = di;
      q.index = static_cast<std::size_t>(i);
      q.label = model.labels()[static_cast<std::size_t>(i)];
    }
  }
  for (std::size_t i = 0; i < dist.size(); ++i) {
    if (model.labels()[i] != q.label) q.nearest_other = std::min(q.nearest_other, dist[i]);
  }
  return q;
}

int nn_predict(const OneNNModel& model, std::span<const double> x) { return nn_query(model, x).label; }

double nn_certified_radius(const OneNNModel& model, std::span<const double> x) {
  if (model.single_class()) return kInfiniteRadius;
  const NeighborQuery q = nn_query(model, x);
  return 0.5 * (q.nearest_other - q.nearest);
}

std::uint64_t boxes_per_axis(double delta) {
  if (!(delta > 0.0 && delta <= 1.0)) throw ConfigError("delta must lie in (0, 1]");
  return static_cast<std::uint64_t>(std::ceil(1.0 / delta - 1e-9));
}

std::uint64_t required_samples(double delta, int d) {
  if (d < 1) throw ConfigError("required_samples: d must be >= 1");
  const std::uint64_t per_axis = boxes_per_axis(delta);
  std::uint64_t boxes = 1;
  for (int i = 0; i < d; ++i) {
    if (boxes > std::numeric_limits<std::uint64_t>::max() / per_axis) {
      throw ConfigError("required_samples: overflow");
    }
    boxes *= per_axis;
  }
  if (boxes > std::numeric_limits<std::uint64_t>::max() / 37) {
    throw ConfigError("required_samples: overflow");
  }
  return 37 * boxes;
}

std::uint64_t box_index(std::span<const double> x, double delta) {
  const std::uint64_t per_axis = boxes_per_axis(delta);
  std::uint64_t index = 0;
  for (double v : x) {
    const double cell = std::floor(v / delta);
    const auto k = static_cast<std::uint64_t>(
        std::clamp(cell, 0.0, static_cast<double>(per_axis - 1)));
    index = index * per_axis + k;
  }
  return index;
}

BoxCoverage box_coverage(const LabeledDataset& train, double delta, int d) {
  if (train.dim() != d) throw ShapeError("box_coverage: dimension mismatch");
  const std::uint64_t per_axis = boxes_per_axis(delta);
  std::uint64_t boxes = 1;
  for (int i = 0; i < d; ++i) boxes *= per_axis;
  if (boxes > (std::uint64_t{1} << 28)) throw ConfigError("box_coverage: too many boxes");

  BoxCoverage out{boxes, 0, 0.0, std::vector<std::uint32_t>(boxes, 0)};
  for (Eigen::Index i = 0; i < train.size(); ++i) {
    ++out.counts[box_index(row_span(train.features(), i), delta)];
  }
  out.occupied = static_cast<std::uint64_t>(
      std::count_if(out.counts.begin(), out.counts.end(), [](std::uint32_t c) { return c > 0; }));
  out.occupancy = static_cast<double>(out.occupied) / static_cast<double>(boxes);
  return out;
}

CoverResult run_cover_experiment(const CoverConfig& cfg, const RandomSource& rng) {
  if (cfg.trials < 1 || cfg.test_per_trial < 1) throw ConfigError("cover: trials and tests >= 1");
  const MarginDistribution dist(cfg.d, cfg.delta, cfg.cell_width);
  const std::uint64_t n = cfg.n > 0 ? cfg.n : required_samples(cfg.delta, cfg.d);
  const double margin = cfg.delta / 2.0;

  CoverResult out;
  out.n = n;
  std::uint64_t boxes = 1;
  for (int i = 0; i < cfg.d; ++i) boxes *= boxes_per_axis(cfg.delta);
  out.coverage_bound = 1.0 - static_cast<double>(boxes) / (static_cast<double>(n) * std::numbers::e);

  for (int t = 0; t < cfg.trials; ++t) {
    RandomSource trial_rng = rng.split(static_cast<std::uint64_t>(t));
    RandomSource train_rng = trial_rng.split("train");
    RandomSource test_rng = trial_rng.split("test");
    const LabeledDataset train = sample_margin(dist, n, train_rng);
    const LabeledDataset test =
        sample_margin(dist, static_cast<std::size_t>(cfg.test_per_trial), test_rng);
    const OneNNModel model = OneNNModel::fit(train, Metric::kLinf);

    std::size_t robust = 0;
    std::size_t clean = 0;
    for (Eigen::Index i = 0; i < test.size(); ++i) {
      const auto x = row_span(test.features(), i);
      const NeighborQuery q = nn_query(model, x);
      const double radius = model.single_class() ? kInfiniteRadius : 0.5 * (q.nearest_other - q.nearest);
      const bool correct = q.label == test.labels()[static_cast<std::size_t>(i)];
      if (correct) ++clean;
      if (correct && radius >= margin) ++robust;
    }
    std::size_t train_certified = 0;
    for (Eigen::Index i = 0; i < train.size(); ++i) {
      if (nn_certified_radius(model, row_span(train.features(), i)) >= margin) ++train_certified;
    }

    const double tests = static_cast<double>(test.size());
    out.trials.push_back({t, static_cast<double>(robust) / tests, static_cast<double>(clean) / tests,
                          box_coverage(train, cfg.delta, cfg.d).occupancy,
                          static_cast<double>(train_certified) / static_cast<double>(train.size())});
  }

  double sum = 0.0;
  for (const auto& r : out.trials) sum += r.robust_acc;
  const double k = static_cast<double>(out.trials.size());
  out.mean_robust_acc = sum / k;
  double var = 0.0;
  for (const auto& r : out.trials) var += (r.robust_acc - out.mean_robust_acc) * (r.robust_acc - out.mean_robust_acc);
  out.half_width = out.trials.size() > 1 ? 1.96 * std::sqrt(var / (k - 1.0) / k) : 0.0;
  return out;
}

}  // namespace lipbench::cover
