#pragma once

// No-Free-Robustness world: labelings of the (d-1)-cube, the distributions
// they induce, the learners, and the attack that zeroes the small feature.

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "lipbench/datasets/dataset.hpp"
#include "lipbench/numerics/random.hpp"

namespace lipbench::hypercube {

inline constexpr int kMinDimension = 2;
inline constexpr int kMaxDimension = 26;

/// ceil(log2 n) + 7, the dimension that caps the seen-vertex probability at
/// n / 2^(d-1) <= 1/64.
int theorem_dimension(std::uint64_t n);

/// sign with sign(0) = +1.
inline int sign_of(double v) { return v < 0.0 ? -1 : 1; }

/// Dataset label encoding: y = -1 -> 0, y = +1 -> 1.
inline int label_of_sign(int y) { return y > 0 ? 1 : 0; }
inline int sign_of_label(int label) { return label == 1 ? 1 : -1; }

/// Explicit truth table phi: {±1}^(d-1) -> {±1}.
///
/// Vertex index: coordinate i contributes bit i, set when the coordinate is
/// +1. A set table bit means phi = +1.
class BooleanLabeling {
 public:
  BooleanLabeling(int robust_dims, std::vector<std::uint64_t> words);

  int robust_dims() const { return robust_dims_; }
  std::uint64_t vertex_count() const { return std::uint64_t{1} << robust_dims_; }
  int value(std::uint64_t vertex) const;

  /// Vertex index of the signs of the first robust_dims() coordinates.
  std::uint64_t vertex_of(std::span<const double> x) const;
  int operator()(std::span<const double> x) const { return value(vertex_of(x)); }

  const std::vector<std::uint64_t>& words() const { return words_; }

 private:
  int robust_dims_;
  std::vector<std::uint64_t> words_;
};

/// Uniform over all 2^(2^(d-1)) tables. Throws ConfigError unless
/// 2 <= d <= 26.
BooleanLabeling sample_labeling(int d, RandomSource& rng);

/// Table from explicit ±1 values listed by vertex index.
BooleanLabeling labeling_from_values(int d, std::span<const int> values);

struct HypercubeDistribution {
  int d;
  double delta;
  BooleanLabeling phi;

  HypercubeDistribution(int d, double delta, BooleanLabeling phi);
};

/// Robust coordinates uniform in ±1, x_d = delta * phi(robust), label sign(x_d).
LabeledDataset sample_points(const HypercubeDistribution& dist, std::size_t n, RandomSource& rng);

/// Predicts ±1 for a length-d feature vector.
using BinaryClassifier = std::function<int(std::span<const double>)>;
/// Maps a training set to a classifier. Rows of x are samples, y holds ±1
/// labels; zero rows is a valid (empty) training set.
using Learner = std::function<BinaryClassifier(const Matrix& x, std::span<const int> y)>;

/// phi(sign(x_1), ..., sign(x_{d-1})); ignores x_d.
BinaryClassifier oracle_robust_classifier(const BooleanLabeling& phi);

/// Always returns sign(x_d), whatever the data.
Learner nonrobust_learner();

/// Remembers training vertices; unseen vertices get the training majority
/// (ties and empty training sets give +1). Never reads x_d.
Learner memorizing_learner();

/// (x_1, ..., x_{d-1}, 0).
std::vector<double> zero_feature_attack(std::span<const double> x);

struct NfrConfig {
  std::uint64_t n = 16;
  int trials = 200;
  int test_per_trial = 1000;
  double delta = 0.1;
  int dimension = 0;  // 0: theorem_dimension(n)
};

struct NfrTrial {
  int trial;
  double clean_acc;
  double adv_acc;
  double train_acc;
  double train_adv_acc;  // training points under the attack
  double seen_fraction;  // test points whose vertex appears in the training set
};

struct NfrResult {
  std::uint64_t n;
  int d;
  double mean_adv_acc;
  double adv_half_width;  // 95% normal approximation
  double mean_clean_acc;
  double analytic_ceiling;  // 1/2 + n / 2^d
  std::vector<NfrTrial> trials;
};

/// Averages adversarial accuracy under zero_feature_attack over fresh
/// labelings, training sets, and test draws. Trial t uses rng.split(t).
NfrResult run_no_free_robustness(const NfrConfig& cfg, const Learner& learner,
                                 const RandomSource& rng);

/// Same protocol with the distribution-aware oracle in place of a learner.
NfrResult run_oracle_reference(const NfrConfig& cfg, const RandomSource& rng);

struct ExactFraction {
  std::int64_t numerator;
  std::int64_t denominator;  // reduced, positive

  friend bool operator==(const ExactFraction&, const ExactFraction&) = default;
  double value() const { return static_cast<double>(numerator) / static_cast<double>(denominator); }
};

ExactFraction reduce(std::int64_t numerator, std::int64_t denominator);

struct Enumeration {
  ExactFraction adv_accuracy;     // averaged over phi, ordered training tuples, test vertices
  ExactFraction seen_probability; // P(test vertex in training set)
};

/// Exhaustive average over every labeling, every ordered training tuple of
/// `train_size` vertices, and every test vertex. Only for d <= 4.
Enumeration enumerate_no_free_robustness(int d, int train_size, const Learner& learner,
                                         double delta = 0.1);

}  // namespace lipbench::hypercube
