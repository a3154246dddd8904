#include "lipbench/hypercube/hypercube.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>
#include <optional>
#include <string>
#include <unordered_map>

#include "lipbench/errors.hpp"

namespace lipbench::hypercube {
namespace {

std::size_t words_for(int robust_dims) {
  const std::uint64_t bits = std::uint64_t{1} << robust_dims;
  return static_cast<std::size_t>((bits + 63) / 64);
}

void check_dimension(int d) {
  if (d < kMinDimension || d > kMaxDimension) {
    throw ConfigError("hypercube: d = " + std::to_string(d) + " outside [2, 26]");
  }
}

std::vector<int> signed_labels(const LabeledDataset& ds) {
  std::vector<int> y(ds.labels().size());
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = sign_of_label(ds.labels()[i]);
  return y;
}

double accuracy(const BinaryClassifier& f, const LabeledDataset& ds, bool attacked) {
  std::size_t correct = 0;
  std::vector<double> x(static_cast<std::size_t>(ds.dim()));
  for (Eigen::Index i = 0; i < ds.size(); ++i) {
    Eigen::Map<RowVector>(x.data(), ds.dim()) = ds.features().row(i);
    if (attacked) x.back() = 0.0;
    if (f(x) == sign_of_label(ds.labels()[static_cast<std::size_t>(i)])) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(ds.size());
}

using TrialModel = std::function<BinaryClassifier(const Matrix&, std::span<const int>,
                                                  const HypercubeDistribution&)>;

NfrResult run_trials(const NfrConfig& cfg, const TrialModel& model, const RandomSource& rng) {
  if (cfg.trials < 1) throw ConfigError("nfr: trials must be >= 1");
  if (cfg.test_per_trial < 1) throw ConfigError("nfr: test_per_trial must be >= 1");
  const int d = cfg.dimension > 0 ? cfg.dimension : theorem_dimension(cfg.n);
  check_dimension(d);

  NfrResult out;
  out.n = cfg.n;
  out.d = d;
  out.analytic_ceiling = std::min(1.0, 0.5 + static_cast<double>(cfg.n) / std::ldexp(1.0, d));

  for (int t = 0; t < cfg.trials; ++t) {
    RandomSource trial_rng = rng.split(static_cast<std::uint64_t>(t));
    RandomSource phi_rng = trial_rng.split("phi");
    RandomSource train_rng = trial_rng.split("train");
    RandomSource test_rng = trial_rng.split("test");

    HypercubeDistribution dist(d, cfg.delta, sample_labeling(d, phi_rng));
    Matrix train_x(0, d);
    std::vector<int> train_y;
    std::optional<LabeledDataset> train;
    if (cfg.n > 0) {
      train = sample_points(dist, cfg.n, train_rng);
      train_x = train->features();
      train_y = signed_labels(*train);
    }
    const BinaryClassifier f = model(train_x, train_y, dist);
    const LabeledDataset test =
        sample_points(dist, static_cast<std::size_t>(cfg.test_per_trial), test_rng);

    std::unordered_map<std::uint64_t, bool> seen;
    for (Eigen::Index i = 0; i < train_x.rows(); ++i) {
      seen[dist.phi.vertex_of(std::span<const double>(train_x.row(i).data(), d))] = true;
    }
    std::size_t seen_count = 0;
    for (Eigen::Index i = 0; i < test.size(); ++i) {
      if (seen.count(dist.phi.vertex_of(std::span<const double>(test.features().row(i).data(), d)))) {
        ++seen_count;
      }
    }

    NfrTrial row;
    row.trial = t;
    row.clean_acc = accuracy(f, test, false);
    row.adv_acc = accuracy(f, test, true);
    row.train_acc = train ? accuracy(f, *train, false) : 1.0;
    row.train_adv_acc = train ? accuracy(f, *train, true) : 1.0;
    row.seen_fraction = static_cast<double>(seen_count) / static_cast<double>(test.size());
    out.trials.push_back(row);
  }

  double sum_adv = 0.0;
  double sum_clean = 0.0;
  for (const auto& r : out.trials) {
    sum_adv += r.adv_acc;
    sum_clean += r.clean_acc;
  }
  const double k = static_cast<double>(out.trials.size());
  out.mean_adv_acc = sum_adv / k;
  out.mean_clean_acc = sum_clean / k;
  double var = 0.0;
  for (const auto& r : out.trials) var += (r.adv_acc - out.mean_adv_acc) * (r.adv_acc - out.mean_adv_acc);
  var = out.trials.size() > 1 ? var / (k - 1.0) : 0.0;
  out.adv_half_width = 1.96 * std::sqrt(var / k);
  return out;
}

}  // namespace

int theorem_dimension(std::uint64_t n) {
  if (n < 1) throw ConfigError("theorem_dimension: n must be >= 1");
  return static_cast<int>(std::bit_width(n - 1)) + 7;
}

BooleanLabeling::BooleanLabeling(int robust_dims, std::vector<std::uint64_t> words)
    : robust_dims_(robust_dims), words_(std::move(words)) {
  check_dimension(robust_dims + 1);
  if (words_.size() != words_for(robust_dims)) {
    throw ShapeError("BooleanLabeling: table length does not match 2^(d-1) bits");
  }
  const std::uint64_t bits = vertex_count();
  if (bits < 64) words_[0] &= (std::uint64_t{1} << bits) - 1;
}

int BooleanLabeling::value(std::uint64_t vertex) const {
  if (vertex >= vertex_count()) throw ShapeError("BooleanLabeling: vertex out of range");
  return ((words_[vertex >> 6] >> (vertex & 63)) & 1U) ? 1 : -1;
}

std::uint64_t BooleanLabeling::vertex_of(std::span<const double> x) const {
  if (x.size() < static_cast<std::size_t>(robust_dims_)) {
    throw ShapeError("BooleanLabeling: input shorter than robust dimension");
  }
  std::uint64_t v = 0;
  for (int i = 0; i < robust_dims_; ++i) {
    if (sign_of(x[static_cast<std::size_t>(i)]) > 0) v |= std::uint64_t{1} << i;
  }
  return v;
}

BooleanLabeling sample_labeling(int d, RandomSource& rng) {
  check_dimension(d);
  std::vector<std::uint64_t> words(words_for(d - 1));
  for (auto& w : words) w = rng();
  return BooleanLabeling(d - 1, std::move(words));
}

BooleanLabeling labeling_from_values(int d, std::span<const int> values) {
  check_dimension(d);
  const std::uint64_t count = std::uint64_t{1} << (d - 1);
  if (values.size() != count) throw ShapeError("labeling_from_values: need 2^(d-1) values");
  std::vector<std::uint64_t> words(words_for(d - 1), 0);
  for (std::uint64_t v = 0; v < count; ++v) {
    if (values[v] > 0) words[v >> 6] |= std::uint64_t{1} << (v & 63);
  }
  return BooleanLabeling(d - 1, std::move(words));
}

HypercubeDistribution::HypercubeDistribution(int d_, double delta_, BooleanLabeling phi_)
    : d(d_), delta(delta_), phi(std::move(phi_)) {
  check_dimension(d);
  if (phi.robust_dims() != d - 1) throw ShapeError("HypercubeDistribution: phi has wrong arity");
  if (!(delta > 0.0 && delta < 1.0)) throw ConfigError("HypercubeDistribution: need 0 < delta < 1");
}

LabeledDataset sample_points(const HypercubeDistribution& dist, std::size_t n, RandomSource& rng) {
  Matrix x(static_cast<Eigen::Index>(n), dist.d);
  std::vector<int> labels(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto row = static_cast<Eigen::Index>(i);
    std::uint64_t vertex = 0;
    for (int j = 0; j < dist.d - 1; ++j) {
      const bool plus = rng.coin();
      x(row, j) = plus ? 1.0 : -1.0;
      if (plus) vertex |= std::uint64_t{1} << j;
    }
    const int y = dist.phi.value(vertex);
    x(row, dist.d - 1) = dist.delta * y;
    labels[i] = label_of_sign(sign_of(x(row, dist.d - 1)));
  }
  return LabeledDataset::from_vectors(std::move(x), std::move(labels), 2);
}

BinaryClassifier oracle_robust_classifier(const BooleanLabeling& phi) {
  return [phi](std::span<const double> x) { return phi(x); };
}

Learner nonrobust_learner() {
  return [](const Matrix&, std::span<const int>) -> BinaryClassifier {
    return [](std::span<const double> x) { return sign_of(x.back()); };
  };
}

Learner memorizing_learner() {
  return [](const Matrix& x, std::span<const int> y) -> BinaryClassifier {
    const auto robust = static_cast<int>(x.cols()) - 1;
    auto vertex = [robust](std::span<const double> v) {
      std::uint64_t key = 0;
      for (int i = 0; i < robust; ++i) {
        if (sign_of(v[static_cast<std::size_t>(i)]) > 0) key |= std::uint64_t{1} << i;
      }
      return key;
    };
    std::unordered_map<std::uint64_t, int> memory;
    long balance = 0;
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
      const int label = y[static_cast<std::size_t>(i)];
      memory.try_emplace(vertex(std::span<const double>(x.row(i).data(), x.cols())), label);
      balance += label;
    }
    const int majority = balance >= 0 ? 1 : -1;
    return [memory = std::move(memory), majority, vertex](std::span<const double> q) {
      const auto it = memory.find(vertex(q));
      return it == memory.end() ? majority : it->second;
    };
  };
}

std::vector<double> zero_feature_attack(std::span<const double> x) {
  std::vector<double> out(x.begin(), x.end());
  if (!out.empty()) out.back() = 0.0;
  return out;
}

NfrResult run_no_free_robustness(const NfrConfig& cfg, const Learner& learner,
                                 const RandomSource& rng) {
  return run_trials(
      cfg,
      [&learner](const Matrix& x, std::span<const int> y, const HypercubeDistribution&) {
        return learner(x, y);
      },
      rng);
}

NfrResult run_oracle_reference(const NfrConfig& cfg, const RandomSource& rng) {
  return run_trials(
      cfg,
      [](const Matrix&, std::span<const int>, const HypercubeDistribution& dist) {
        return oracle_robust_classifier(dist.phi);
      },
      rng);
}

ExactFraction reduce(std::int64_t numerator, std::int64_t denominator) {
  if (denominator == 0) throw DomainError("reduce: zero denominator");
  if (denominator < 0) {
    numerator = -numerator;
    denominator = -denominator;
  }
  const std::int64_t g = std::gcd(numerator, denominator);
  return {numerator / g, denominator / g};
}

Enumeration enumerate_no_free_robustness(int d, int train_size, const Learner& learner,
                                         double delta) {
  if (d < kMinDimension || d > 4) throw ConfigError("enumerate: d must lie in [2, 4]");
  if (train_size < 0 || train_size > 4) throw ConfigError("enumerate: train_size in [0, 4]");
  const int robust = d - 1;
  const std::uint64_t vertices = std::uint64_t{1} << robust;
  const std::uint64_t labelings = std::uint64_t{1} << vertices;
  std::uint64_t tuples = 1;
  for (int i = 0; i < train_size; ++i) tuples *= vertices;

  auto point = [&](std::uint64_t vertex, int y) {
    std::vector<double> x(static_cast<std::size_t>(d));
    for (int j = 0; j < robust; ++j) x[static_cast<std::size_t>(j)] = (vertex >> j) & 1U ? 1.0 : -1.0;
    x.back() = delta * y;
    return x;
  };

  std::int64_t correct = 0;
  std::int64_t total = 0;
  std::int64_t seen = 0;
  std::int64_t seen_total = 0;
  for (std::uint64_t table = 0; table < labelings; ++table) {
    const BooleanLabeling phi(robust, {table});
    for (std::uint64_t code = 0; code < tuples; ++code) {
      Matrix x(train_size, d);
      std::vector<int> y(static_cast<std::size_t>(train_size));
      std::vector<std::uint64_t> members;
      std::uint64_t rest = code;
      for (int i = 0; i < train_size; ++i) {
        const std::uint64_t v = rest % vertices;
        rest /= vertices;
        members.push_back(v);
        y[static_cast<std::size_t>(i)] = phi.value(v);
        const auto p = point(v, y[static_cast<std::size_t>(i)]);
        for (int j = 0; j < d; ++j) x(i, j) = p[static_cast<std::size_t>(j)];
      }
      const BinaryClassifier f = learner(x, y);
      for (std::uint64_t v = 0; v < vertices; ++v) {
        const int truth = phi.value(v);
        const auto attacked = zero_feature_attack(point(v, truth));
        if (f(attacked) == truth) ++correct;
        ++total;
        if (table == 0) {
          if (std::find(members.begin(), members.end(), v) != members.end()) ++seen;
          ++seen_total;
        }
      }
    }
  }
  return {reduce(correct, total), reduce(seen, seen_total)};
}

}  // namespace lipbench::hypercube
