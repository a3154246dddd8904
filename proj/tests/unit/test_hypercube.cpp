#include <gtest/gtest.h>

#include <cmath>
#include <map>

#include "lipbench/errors.hpp"
#include "lipbench/hypercube/hypercube.hpp"

namespace lb = lipbench;
namespace hc = lipbench::hypercube;

namespace {

std::vector<int> signs_of(const lb::LabeledDataset& ds) {
  std::vector<int> y;
  for (int label : ds.labels()) y.push_back(hc::sign_of_label(label));
  return y;
}

std::vector<double> row(const lb::Matrix& x, Eigen::Index i) {
  return {x.row(i).data(), x.row(i).data() + x.cols()};
}

double accuracy(const hc::BinaryClassifier& f, const lb::LabeledDataset& ds, bool attacked) {
  int correct = 0;
  const auto y = signs_of(ds);
  for (Eigen::Index i = 0; i < ds.size(); ++i) {
    auto x = row(ds.features(), i);
    if (attacked) x = hc::zero_feature_attack(x);
    correct += f(x) == y[static_cast<std::size_t>(i)];
  }
  return static_cast<double>(correct) / static_cast<double>(ds.size());
}

}  // namespace

TEST(DimensionRule, Values) {
  EXPECT_EQ(hc::theorem_dimension(16), 11);
  EXPECT_EQ(hc::theorem_dimension(1), 7);
  EXPECT_EQ(hc::theorem_dimension(1000), 17);
  EXPECT_EQ(hc::theorem_dimension(1024), 17);
  EXPECT_EQ(hc::theorem_dimension(1025), 18);
  EXPECT_THROW(hc::theorem_dimension(0), lb::ConfigError);
}

TEST(DimensionRule, SeenFractionBound) {
  for (std::uint64_t n = 1; n < 5000; n += 37) {
    const int d = hc::theorem_dimension(n);
    EXPECT_LE(static_cast<double>(n) / std::ldexp(1.0, d - 1), 1.0 / 64.0);
  }
}

TEST(Labeling, UniformOverTablesAtD2) {
  lb::RandomSource rng(1);
  std::map<std::uint64_t, int> counts;
  const int trials = 100000;
  for (int t = 0; t < trials; ++t) {
    const auto phi = hc::sample_labeling(2, rng);
    ++counts[(phi.value(0) > 0 ? 1u : 0u) | (phi.value(1) > 0 ? 2u : 0u)];
  }
  ASSERT_EQ(counts.size(), 4u);
  double chi2 = 0.0;
  for (const auto& [table, c] : counts) {
    chi2 += (c - trials / 4.0) * (c - trials / 4.0) / (trials / 4.0);
  }
  EXPECT_LT(chi2, 16.27);  // 0.999 quantile, 3 degrees of freedom
}

TEST(Labeling, DeterministicAndRangeChecked) {
  lb::RandomSource a(5), b(5);
  EXPECT_EQ(hc::sample_labeling(12, a).words(), hc::sample_labeling(12, b).words());
  EXPECT_THROW(hc::sample_labeling(30, a), lb::ConfigError);
  EXPECT_THROW(hc::sample_labeling(1, a), lb::ConfigError);
}

TEST(Labeling, VertexIndexing) {
  const std::vector<int> values = {-1, 1, 1, -1};  // XOR-like on 2 robust dims
  const auto phi = hc::labeling_from_values(3, values);
  const std::vector<double> pm = {1.0, -1.0, 0.0};
  EXPECT_EQ(phi.vertex_of(pm), 1u);
  EXPECT_EQ(phi(pm), 1);
  const std::vector<double> mm = {-1.0, -1.0, 0.3};
  EXPECT_EQ(phi(mm), -1);
  const std::vector<double> zero = {0.0, 0.0};
  EXPECT_EQ(phi.vertex_of(zero), 3u);  // sign(0) = +1
  EXPECT_THROW(hc::labeling_from_values(3, std::vector<int>{1, 1}), lb::ShapeError);
}

TEST(SamplePoints, HandExample) {
  // d = 3, phi(+1, -1) = -1 everywhere; every sample sits on the same label rule.
  const auto phi = hc::labeling_from_values(3, std::vector<int>{-1, -1, -1, -1});
  const hc::HypercubeDistribution dist(3, 0.1, phi);
  lb::RandomSource rng(2);
  const auto ds = hc::sample_points(dist, 50, rng);
  for (Eigen::Index i = 0; i < ds.size(); ++i) {
    EXPECT_EQ(ds.features()(i, 2), -0.1);
    EXPECT_EQ(ds.labels()[static_cast<std::size_t>(i)], 0);
  }
}

TEST(SamplePoints, ConstructionInvariants) {
  lb::RandomSource rng(3);
  const int d = 9;
  const double delta = 0.25;
  const hc::HypercubeDistribution dist(d, delta, hc::sample_labeling(d, rng));
  const auto ds = hc::sample_points(dist, 10000, rng);
  double mean_x1 = 0.0;
  for (Eigen::Index i = 0; i < ds.size(); ++i) {
    const auto x = row(ds.features(), i);
    for (int j = 0; j + 1 < d; ++j) EXPECT_EQ(std::abs(x[static_cast<std::size_t>(j)]), 1.0);
    EXPECT_EQ(std::abs(x.back()), delta);
    EXPECT_EQ(hc::sign_of(x.back()), hc::sign_of_label(ds.labels()[static_cast<std::size_t>(i)]));
    EXPECT_EQ(hc::sign_of(x.back()), dist.phi(x));
    mean_x1 += x[0];
  }
  EXPECT_NEAR(mean_x1 / 10000.0, 0.0, 0.05);
}

TEST(Oracle, PerfectAndAttackInvariant) {
  lb::RandomSource rng(4);
  const hc::HypercubeDistribution dist(10, 0.1, hc::sample_labeling(10, rng));
  const auto ds = hc::sample_points(dist, 10000, rng);
  const auto f = hc::oracle_robust_classifier(dist.phi);
  EXPECT_EQ(accuracy(f, ds, false), 1.0);
  EXPECT_EQ(accuracy(f, ds, true), 1.0);
  for (Eigen::Index i = 0; i < 200; ++i) {
    auto x = row(ds.features(), i);
    const int before = f(x);
    for (std::size_t j = 0; j + 1 < x.size(); ++j) x[j] *= rng.coin() ? 0.1 : 1.9;
    EXPECT_EQ(f(x), before);
  }
}

TEST(NonRobust, CleanPerfectAttackedCollapses) {
  lb::RandomSource rng(5);
  const hc::HypercubeDistribution dist(8, 0.1, hc::sample_labeling(8, rng));
  const auto ds = hc::sample_points(dist, 10000, rng);
  const auto f = hc::nonrobust_learner()(lb::Matrix(0, 8), {});
  EXPECT_EQ(accuracy(f, ds, false), 1.0);
  // Attacked inputs all read as +1: accuracy is the fraction of +1 labels.
  const auto y = signs_of(ds);
  const double positives = static_cast<double>(std::count(y.begin(), y.end(), 1)) / 10000.0;
  EXPECT_DOUBLE_EQ(accuracy(f, ds, true), positives);
}

TEST(Memorizing, RecallsTrainingAndFallsBackToMajority) {
  lb::Matrix x(4, 3);
  x << 1, 1, 0.1,    //
      1, -1, 0.1,    //
      -1, 1, 0.1,    //
      -1, -1, -0.1;  //
  const std::vector<int> y = {1, 1, 1, -1};
  const auto f = hc::memorizing_learner()(x.topRows(4), y);
  EXPECT_EQ(f(row(x, 3)), -1);
  EXPECT_EQ(f(row(x, 0)), 1);
  // Drop the (-1,-1) vertex: the unseen vertex gets the 3-to-1 majority.
  const auto g = hc::memorizing_learner()(x.topRows(3), std::vector<int>{1, 1, 1});
  EXPECT_EQ(g(row(x, 3)), 1);
  const std::vector<int> y2 = {-1, -1, 1};
  const auto h = hc::memorizing_learner()(x.topRows(3), y2);
  EXPECT_EQ(h(row(x, 3)), -1);
  // Never reads x_d.
  std::vector<double> probe = row(x, 0);
  probe[2] = -5.0;
  EXPECT_EQ(f(probe), 1);
  const auto empty = hc::memorizing_learner()(lb::Matrix(0, 3), {});
  EXPECT_EQ(empty(row(x, 3)), 1);
}

TEST(Attack, ZeroesLastCoordinate) {
  const std::vector<double> x = {1, -1, 0.1};
  EXPECT_EQ(hc::zero_feature_attack(x), (std::vector<double>{1, -1, 0}));
  const std::vector<double> z = {1, -1, 0};
  EXPECT_EQ(hc::zero_feature_attack(z), z);
  lb::RandomSource rng(6);
  const hc::HypercubeDistribution dist(5, 0.3, hc::sample_labeling(5, rng));
  const auto ds = hc::sample_points(dist, 100, rng);
  for (Eigen::Index i = 0; i < ds.size(); ++i) {
    const auto p = row(ds.features(), i);
    const auto q = hc::zero_feature_attack(p);
    double norm = 0.0;
    for (std::size_t j = 0; j < p.size(); ++j) norm += (p[j] - q[j]) * (p[j] - q[j]);
    EXPECT_DOUBLE_EQ(std::sqrt(norm), 0.3);
  }
}

TEST(Fraction, Reduce) {
  EXPECT_EQ(hc::reduce(6, 8), (hc::ExactFraction{3, 4}));
  EXPECT_EQ(hc::reduce(-2, -4), (hc::ExactFraction{1, 2}));
  EXPECT_EQ(hc::reduce(0, 5), (hc::ExactFraction{0, 1}));
  EXPECT_THROW(hc::reduce(1, 0), lb::DomainError);
}

TEST(Enumeration, TinyCubeMatchesHalfOnUnseen) {
  // d = 2: two vertices, training tuple of one vertex sees the test vertex
  // half the time; unseen vertices are right exactly half the time.
  const auto e = hc::enumerate_no_free_robustness(2, 1, hc::memorizing_learner());
  EXPECT_EQ(e.seen_probability, (hc::ExactFraction{1, 2}));
  EXPECT_EQ(e.adv_accuracy, (hc::ExactFraction{3, 4}));
  const auto zero = hc::enumerate_no_free_robustness(2, 0, hc::memorizing_learner());
  EXPECT_EQ(zero.adv_accuracy, (hc::ExactFraction{1, 2}));
}

TEST(Enumeration, AccuracyIsHalfPlusHalfSeenForAnySize) {
  for (int d = 2; d <= 4; ++d) {
    for (int m = 0; m <= 3; ++m) {
      const auto e = hc::enumerate_no_free_robustness(d, m, hc::memorizing_learner());
      const auto expected = hc::reduce(e.seen_probability.denominator + e.seen_probability.numerator,
                                       2 * e.seen_probability.denominator);
      EXPECT_EQ(e.adv_accuracy, expected) << "d=" << d << " m=" << m;
    }
  }
}

TEST(Enumeration, NonRobustLearnerIsHalfAndBoundsChecked) {
  const auto e = hc::enumerate_no_free_robustness(3, 2, hc::nonrobust_learner());
  EXPECT_EQ(e.adv_accuracy, (hc::ExactFraction{1, 2}));
  EXPECT_THROW(hc::enumerate_no_free_robustness(5, 1, hc::memorizing_learner()), lb::ConfigError);
}

TEST(Experiment, MemorizingBelowCeiling) {
  hc::NfrConfig cfg;
  cfg.n = 16;
  cfg.trials = 60;
  cfg.test_per_trial = 500;
  const auto r = hc::run_no_free_robustness(cfg, hc::memorizing_learner(), lb::RandomSource(7));
  EXPECT_EQ(r.d, 11);
  EXPECT_NEAR(r.analytic_ceiling, 0.5 + 16.0 / 2048.0, 1e-15);
  EXPECT_LE(r.mean_adv_acc, 0.51 + 3 * r.adv_half_width);
  EXPECT_EQ(r.trials.size(), 60u);
  for (const auto& t : r.trials) EXPECT_EQ(t.train_acc, 1.0);
}

TEST(Experiment, NonRobustBelowCeilingAndCleanPerfect) {
  hc::NfrConfig cfg;
  cfg.n = 8;
  cfg.trials = 40;
  cfg.test_per_trial = 400;
  const auto r = hc::run_no_free_robustness(cfg, hc::nonrobust_learner(), lb::RandomSource(8));
  EXPECT_EQ(r.mean_clean_acc, 1.0);
  EXPECT_LE(r.mean_adv_acc, 0.51 + 3 * r.adv_half_width);
}

TEST(Experiment, FullySeenTinyCubeIsRobust) {
  // d = 2 has two vertices; n = 64 draws see both with probability 1 - 2^-63.
  hc::NfrConfig cfg;
  cfg.n = 64;
  cfg.trials = 20;
  cfg.test_per_trial = 200;
  cfg.dimension = 2;
  const auto r = hc::run_no_free_robustness(cfg, hc::memorizing_learner(), lb::RandomSource(9));
  EXPECT_EQ(r.mean_adv_acc, 1.0);
}

TEST(Experiment, OracleAndDeterminism) {
  hc::NfrConfig cfg;
  cfg.n = 4;
  cfg.trials = 5;
  cfg.test_per_trial = 100;
  const auto o = hc::run_oracle_reference(cfg, lb::RandomSource(10));
  EXPECT_EQ(o.mean_adv_acc, 1.0);
  EXPECT_EQ(o.mean_clean_acc, 1.0);
  const auto a = hc::run_no_free_robustness(cfg, hc::memorizing_learner(), lb::RandomSource(11));
  const auto b = hc::run_no_free_robustness(cfg, hc::memorizing_learner(), lb::RandomSource(11));
  for (std::size_t t = 0; t < a.trials.size(); ++t) {
    EXPECT_EQ(a.trials[t].adv_acc, b.trials[t].adv_acc);
    EXPECT_EQ(a.trials[t].clean_acc, b.trials[t].clean_acc);
  }
  cfg.trials = 0;
  EXPECT_THROW(hc::run_oracle_reference(cfg, lb::RandomSource(1)), lb::ConfigError);
}
