#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "lipbench/errors.hpp"
#include "lipbench/lipnet/certify.hpp"
#include "lipbench/lipnet/layers.hpp"
#include "lipbench/lipnet/loss.hpp"
#include "lipbench/lipnet/network.hpp"
#include "lipbench/lipnet/train.hpp"
#include "lipbench/numerics/linalg.hpp"

namespace lb = lipbench;
using namespace lipbench::lipnet;

namespace {

lb::Matrix random_matrix(lb::RandomSource& rng, Eigen::Index r, Eigen::Index c, double scale = 1.0) {
  lb::Matrix m(r, c);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = scale * rng.normal();
  return m;
}

// Independent spectral norm: square root of the top eigenvalue of WᵀW from Eigen.
double sigma_max_oracle(const lb::Matrix& w) {
  Eigen::MatrixXd g = w.transpose() * w;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(g);
  return std::sqrt(std::max(0.0, es.eigenvalues().maxCoeff()));
}

double relative_error(double a, double b) {
  return std::abs(a - b) / std::max({1e-6, std::abs(a), std::abs(b)});
}

Network random_net(lb::RandomSource& rng, LayerKind kind, Activation act, int in, int width,
                   int depth, int classes) {
  MlpSpec spec;
  spec.input_dim = in;
  spec.width = width;
  spec.depth = depth;
  spec.classes = classes;
  spec.kind = kind;
  spec.activation = act;
  spec.init = InitScheme::kOrthogonal;
  Network net = make_mlp(spec, rng);
  // Move away from the structured init so every branch of the gradient is exercised.
  for (auto& l : net.layers()) {
    l.weight += random_matrix(rng, l.weight.rows(), l.weight.cols(), 0.3);
    for (Eigen::Index i = 0; i < l.bias.size(); ++i) l.bias[i] = 0.2 * rng.normal();
  }
  return net;
}

// Central differences over every weight and bias; returns the worst relative error.
double gradient_check(Network& net, const lb::Matrix& x, const std::vector<int>& y,
                      const LossSpec& loss) {
  const SpectralScales scales = converged_spectral(net);
  const Gradients g = backward(net, x, y, loss, scales);
  const double h = 1e-6;
  double worst = 0.0;
  for (std::size_t l = 0; l < net.layers().size(); ++l) {
    auto probe = [&](double& p, double analytic) {
      const double keep = p;
      p = keep + h;
      const double up = batch_loss(net, x, y, loss, scales);
      p = keep - h;
      const double down = batch_loss(net, x, y, loss, scales);
      p = keep;
      const double numeric = (up - down) / (2 * h);
      worst = std::max(worst, std::abs(numeric - analytic) /
                                  std::max(1e-4, std::max(std::abs(numeric), std::abs(analytic))));
    };
    auto& layer = net.layers()[l];
    for (Eigen::Index i = 0; i < layer.weight.size(); ++i) {
      probe(layer.weight.data()[i], g.layers[l].weight.data()[i]);
    }
    for (Eigen::Index i = 0; i < layer.bias.size(); ++i) probe(layer.bias[i], g.layers[l].bias[i]);
  }
  return worst;
}

}  // namespace

TEST(AolLayer, IdentityAndScalarCases) {
  const lb::Matrix eye = lb::Matrix::Identity(2, 2);
  EXPECT_TRUE(aol_effective_weight(eye).isApprox(eye));
  lb::Matrix two(1, 1);
  two << 2.0;
  EXPECT_DOUBLE_EQ(aol_scales(two)[0], 0.5);
  EXPECT_DOUBLE_EQ(aol_effective_weight(two)(0, 0), 1.0);
}

TEST(AolLayer, ZeroColumnGetsZeroScale) {
  lb::Matrix w(2, 2);
  w << 1.0, 0.0, 2.0, 0.0;
  const lb::Vector d = aol_scales(w);
  EXPECT_EQ(d[1], 0.0);
  EXPECT_TRUE(aol_effective_weight(w).allFinite());
}

TEST(AolLayer, SpectralNormAtMostOneOnRandomWeights) {
  lb::RandomSource rng(11);
  for (int t = 0; t < 100; ++t) {
    const lb::Matrix w = random_matrix(rng, 16, 16, rng.uniform(0.01, 10.0));
    EXPECT_LE(sigma_max_oracle(aol_effective_weight(w)), 1.0 + 1e-9);
  }
}

TEST(CplLayer, HandCases) {
  const lb::Matrix zero = lb::Matrix::Zero(3, 3);
  const std::vector<double> x = {0.3, -1.0, 2.0};
  const lb::Vector z = cpl_forward(x, zero, lb::Vector::Zero(3), lb::Vector::Ones(3));
  EXPECT_EQ(z, lb::Vector::Map(x.data(), 3));

  const lb::Matrix one = lb::Matrix::Identity(1, 1);
  const std::vector<double> x1 = {1.0};
  const lb::Vector z1 = cpl_forward(x1, one, lb::Vector::Zero(1), lb::Vector::Ones(1));
  EXPECT_NEAR(z1[0], -1.0, 1e-12);
}

TEST(CplLayer, ScaleFromSigma) {
  EXPECT_DOUBLE_EQ(cpl_scale_from_sigma(1.0), 2.0);
  EXPECT_DOUBLE_EQ(cpl_scale_from_sigma(2.0), 0.5);
  EXPECT_EQ(cpl_scale_from_sigma(0.0), 0.0);
}

TEST(CplLayer, SampledPairsAreOneLipschitz) {
  lb::RandomSource rng(12);
  for (int t = 0; t < 100; ++t) {
    const int n = 8;
    const lb::Matrix w = random_matrix(rng, 12, n);
    lb::Vector b(12);
    for (auto& v : b) v = rng.normal();
    const lb::Vector start = lb::Vector::Ones(n);
    for (int p = 0; p < 20; ++p) {
      std::vector<double> a(n), c(n);
      for (int i = 0; i < n; ++i) a[i] = rng.normal(), c[i] = a[i] + 0.5 * rng.normal();
      const lb::Vector za = cpl_forward(a, w, b, start);
      const lb::Vector zc = cpl_forward(c, w, b, start);
      const double in = (lb::Vector::Map(a.data(), n) - lb::Vector::Map(c.data(), n)).norm();
      EXPECT_LE((za - zc).norm(), in * (1 + 1e-6));
    }
  }
}

TEST(CplLayer, DimensionMismatchThrows) {
  const lb::Matrix w = lb::Matrix::Identity(2, 2);
  const std::vector<double> x = {1.0, 2.0, 3.0};
  EXPECT_THROW(cpl_forward(x, w, lb::Vector::Zero(2), 1.0), lb::ShapeError);
}

TEST(MaxMin, PairsAndNorm) {
  EXPECT_EQ(maxmin(std::vector<double>{1, 3}), (std::vector<double>{3, 1}));
  EXPECT_EQ(maxmin(std::vector<double>{3, 1}), (std::vector<double>{3, 1}));
  EXPECT_THROW(maxmin(std::vector<double>{1, 2, 3}), lb::ShapeError);
  lb::RandomSource rng(3);
  for (int t = 0; t < 200; ++t) {
    std::vector<double> v(10);
    for (auto& e : v) e = rng.normal();
    const auto out = maxmin(v);
    double a = 0, b = 0;
    for (int i = 0; i < 10; ++i) a += v[i] * v[i], b += out[i] * out[i];
    EXPECT_NEAR(std::sqrt(a), std::sqrt(b), 1e-12);
  }
}

TEST(Loss, HandValues) {
  LossSpec t{LossKind::kTemperatureCe, 0.0, 0.7, 0.0};
  EXPECT_NEAR(loss_value(t, std::vector<double>{0, 0}, 1), std::log(2.0), 1e-15);
  LossSpec o{LossKind::kOffsetCe, 0.25, 0.3, 0.0};
  EXPECT_NEAR(loss_value(o, std::vector<double>{0.25, 0.0}, 0), std::log(2.0), 1e-15);
  LossSpec s{LossKind::kSelfNormCe, 0.0, 1.0, 0.0};
  EXPECT_NEAR(loss_value(s, std::vector<double>{1, -1}, 0), std::log1p(std::exp(-1.0)), 1e-15);
}

TEST(Loss, SelfNormFloorOnConstantScores) {
  LossSpec s{LossKind::kSelfNormCe, 0.0, 1.0, 0.0};
  std::vector<double> g(3);
  const double v = loss_and_gradient(s, std::vector<double>{2, 2, 2}, 1, g);
  EXPECT_TRUE(std::isfinite(v));
  EXPECT_GE(v, 0.0);
}

TEST(Loss, ScoreGradientMatchesFiniteDifferences) {
  lb::RandomSource rng(5);
  const LossSpec specs[] = {{LossKind::kTemperatureCe, 0, 0.125, 0},
                            {LossKind::kOffsetCe, 0.25, 0.25, 0},
                            {LossKind::kSelfNormCe, 0, 1, 0.1},
                            {LossKind::kSelfNormCe, 0, 1, 0.0}};
  for (const auto& spec : specs) {
    for (int t = 0; t < 20; ++t) {
      std::vector<double> s(5), g(5);
      for (auto& v : s) v = rng.normal();
      const int y = static_cast<int>(rng.uniform_index(5));
      loss_and_gradient(spec, s, y, g);
      for (int i = 0; i < 5; ++i) {
        auto sp = s, sm = s;
        sp[i] += 1e-6;
        sm[i] -= 1e-6;
        const double fd = (loss_value(spec, sp, y) - loss_value(spec, sm, y)) / 2e-6;
        // Absolute tolerance for near-zero entries, where differencing noise dominates.
        EXPECT_LE(std::abs(fd - g[i]), 1e-5 * std::max(1e-2, std::abs(g[i]))) << to_string(spec.kind);
      }
    }
  }
}

TEST(Loss, InvalidSpecRejected) {
  EXPECT_THROW((LossSpec{LossKind::kOffsetCe, 0.25, 0.0, 0}.validate()), lb::ConfigError);
  EXPECT_THROW((LossSpec{LossKind::kSelfNormCe, 0, 1, -1}.validate()), lb::ConfigError);
  EXPECT_THROW(parse_loss_kind("hinge"), lb::ConfigError);
}

TEST(Network, IdentityAolLayerPassesPaddedInput) {
  DenseLayer layer;
  layer.kind = LayerKind::kAol;
  layer.weight = lb::Matrix::Identity(4, 4);
  layer.bias = lb::Vector::Zero(4);
  const Network net(3, 4, {layer});
  const std::vector<double> x = {0.5, -2.0, 1.0};
  const lb::Vector s = forward(net, x);
  EXPECT_EQ(s.size(), 4);
  EXPECT_DOUBLE_EQ(s[0], 0.5);
  EXPECT_DOUBLE_EQ(s[1], -2.0);
  EXPECT_DOUBLE_EQ(s[2], 1.0);
  EXPECT_DOUBLE_EQ(s[3], 0.0);
  EXPECT_EQ(forward(net, x), s);
  EXPECT_THROW(forward(net, std::vector<double>{1.0}), lb::ShapeError);
}

TEST(Network, RandomLipschitzNetsSatisfySampledBound) {
  lb::RandomSource rng(21);
  for (LayerKind kind : {LayerKind::kAol, LayerKind::kCpl}) {
    Network net = random_net(rng, kind, Activation::kMaxMin, 6, 8, 4, 3);
    ASSERT_TRUE(net.is_lipschitz());
    const InferenceModel model(net);
    for (int p = 0; p < 2000; ++p) {
      lb::Matrix pair(2, 6);
      for (Eigen::Index i = 0; i < pair.size(); ++i) pair.data()[i] = rng.normal();
      const lb::Matrix s = model.forward(pair);
      EXPECT_LE((s.row(0) - s.row(1)).norm(), (pair.row(0) - pair.row(1)).norm() * (1 + 1e-6));
    }
  }
}

TEST(Network, MlpGeometry) {
  lb::RandomSource rng(1);
  MlpSpec spec;
  spec.input_dim = 10;
  spec.width = 16;
  spec.depth = 3;
  spec.classes = 4;
  const Network padded = make_mlp(spec, rng);
  EXPECT_EQ(padded.pad_to(), 16);
  EXPECT_EQ(padded.output_dim(), 4);
  // Square AOL layers start at the identity.
  EXPECT_TRUE(padded.layers()[0].weight.isApprox(lb::Matrix::Identity(16, 16)));

  spec.input_dim = 32;
  spec.kind = LayerKind::kCpl;
  const Network narrow = make_mlp(spec, rng);
  EXPECT_EQ(narrow.pad_to(), 32);
  EXPECT_EQ(narrow.layers()[0].kind, LayerKind::kAol);
  EXPECT_EQ(narrow.layers()[1].kind, LayerKind::kCpl);
  EXPECT_EQ(narrow.layers()[2].kind, LayerKind::kAol);
}

TEST(Backward, MatchesFiniteDifferencesAcrossLayerKindsAndLosses) {
  lb::RandomSource rng(31);
  const LossSpec losses[] = {{LossKind::kTemperatureCe, 0, 0.5, 0},
                             {LossKind::kOffsetCe, 0.25, 0.25, 0},
                             {LossKind::kSelfNormCe, 0, 1, 0.1}};
  for (LayerKind kind : {LayerKind::kAol, LayerKind::kCpl, LayerKind::kStandard}) {
    for (const auto& loss : losses) {
      const Activation act = kind == LayerKind::kStandard ? Activation::kRelu : Activation::kMaxMin;
      Network net = random_net(rng, kind, act, 5, 6, 3, 3);
      const lb::Matrix x = random_matrix(rng, 4, 5);
      const std::vector<int> y = {0, 1, 2, 1};
      EXPECT_LE(gradient_check(net, x, y, loss), 1e-4) << to_string(kind) << " " << to_string(loss.kind);
    }
  }
}

TEST(Backward, ZeroWeightSymmetricBatchGivesZeroBiasGradient) {
  DenseLayer layer;
  layer.kind = LayerKind::kAol;
  layer.weight = lb::Matrix::Zero(2, 2);
  layer.bias = lb::Vector::Zero(2);
  const Network net(2, 2, {layer});
  lb::Matrix x(2, 2);
  x << 1, 2, 3, 4;
  const std::vector<int> y = {0, 1};
  const auto g = backward(net, x, y, LossSpec{LossKind::kTemperatureCe, 0, 1, 0}, {0.0});
  EXPECT_NEAR(g.layers[0].bias.norm(), 0.0, 1e-15);
}

TEST(Checkpoint, RoundTripIsExact) {
  lb::RandomSource rng(8);
  Network net = random_net(rng, LayerKind::kCpl, Activation::kMaxMin, 5, 6, 3, 3);
  std::stringstream buf;
  save_checkpoint(buf, net);
  const Network back = load_checkpoint(buf);
  ASSERT_EQ(back.layers().size(), net.layers().size());
  for (std::size_t l = 0; l < net.layers().size(); ++l) {
    EXPECT_EQ(back.layers()[l].weight, net.layers()[l].weight);
    EXPECT_EQ(back.layers()[l].bias, net.layers()[l].bias);
    EXPECT_EQ(back.layers()[l].power_vector, net.layers()[l].power_vector);
    EXPECT_EQ(back.layers()[l].kind, net.layers()[l].kind);
  }
  std::stringstream bad("NOPE1234");
  EXPECT_THROW(load_checkpoint(bad), lb::ParseError);
}

TEST(Cra, HandArithmetic) {
  lb::Matrix s(1, 2);
  s << 1.0, 0.5;
  const std::vector<int> y = {0};
  EXPECT_EQ(cra(s, y, kDefaultEpsilon), 1.0);
  s << 0.6, 0.5;
  EXPECT_EQ(cra(s, y, kDefaultEpsilon), 0.0);
  s << 0.5, 0.5;
  EXPECT_EQ(cra(s, y, 0.0), 0.0);
  EXPECT_EQ(accuracy(s, y), 1.0);  // ties resolve to the lowest class
}

TEST(Cra, NonIncreasingInEpsilonAndBelowAccuracy) {
  lb::RandomSource rng(4);
  const lb::Matrix s = random_matrix(rng, 300, 4);
  std::vector<int> y(300);
  for (auto& v : y) v = static_cast<int>(rng.uniform_index(4));
  double prev = 1.0;
  for (double eps = 0.0; eps < 2.0; eps += 0.05) {
    const double c = cra(s, y, eps);
    EXPECT_LE(c, prev);
    EXPECT_LE(c, accuracy(s, y));
    prev = c;
  }
}

TEST(Schedule, EndpointsAndShape) {
  const OneCycleSchedule sched(0.5, 100);
  EXPECT_DOUBLE_EQ(sched(0), 0.5 / 25);
  EXPECT_DOUBLE_EQ(sched(10), 0.5);
  EXPECT_DOUBLE_EQ(sched(99), 0.5 / 1e4);
  EXPECT_LT(sched(5), sched(10));
  EXPECT_GT(sched(50), sched(80));
  EXPECT_THROW(OneCycleSchedule(0.1, 0), lb::ConfigError);
}

TEST(Train, ZeroEpochsRejected) {
  lb::RandomSource rng(2);
  Network net = random_net(rng, LayerKind::kAol, Activation::kMaxMin, 2, 2, 1, 2);
  const auto data = lb::LabeledDataset::from_vectors(lb::Matrix::Zero(2, 2), {0, 1}, 2);
  TrainConfig cfg;
  cfg.epochs = 0;
  EXPECT_THROW(train(net, data, cfg), lb::ConfigError);
}

TEST(Train, SeparableToyReachesFullTrainingCra) {
  lb::RandomSource rng(17);
  const int n = 200;
  lb::Matrix x(n, 2);
  std::vector<int> y(n);
  for (int i = 0; i < n; ++i) {
    y[i] = i % 2;
    x(i, 0) = (y[i] ? 1.0 : -1.0) * rng.uniform(0.6, 1.0);
    x(i, 1) = rng.uniform(-1.0, 1.0);
  }
  const auto data = lb::LabeledDataset::from_vectors(x, y, 2);
  MlpSpec spec;
  spec.input_dim = 2;
  spec.width = 8;
  spec.depth = 3;
  spec.classes = 2;
  Network net = make_mlp(spec, rng);
  TrainConfig cfg;
  cfg.epochs = 60;
  cfg.batch_size = 32;
  cfg.peak_lr = 0.1;
  cfg.seed = 3;
  const auto history = train(net, data, cfg);
  ASSERT_EQ(history.size(), 60u);
  EXPECT_EQ(evaluate(InferenceModel(net), data, kDefaultEpsilon).cra, 1.0);
}

TEST(Train, DeterministicGivenSeed) {
  auto run = [] {
    lb::RandomSource rng(9);
    MlpSpec spec{4, 4, 2, 2, LayerKind::kCpl, Activation::kMaxMin, InitScheme::kIdentity};
    Network net = make_mlp(spec, rng);
    lb::Matrix x = random_matrix(rng, 40, 4);
    std::vector<int> y(40);
    for (int i = 0; i < 40; ++i) y[i] = x(i, 0) > 0;
    TrainConfig cfg;
    cfg.epochs = 3;
    cfg.batch_size = 8;
    cfg.input_noise = 0.1;
    train(net, lb::LabeledDataset::from_vectors(x, y, 2), cfg);
    return net.layers()[1].weight;
  };
  EXPECT_EQ(run(), run());
}

TEST(RandomBallAttack, ZeroEpsilonGivesCleanMarginAndCertifiedPointsSurvive) {
  lb::RandomSource rng(23);
  Network net = random_net(rng, LayerKind::kAol, Activation::kMaxMin, 4, 6, 3, 3);
  const InferenceModel model(net);
  for (int t = 0; t < 50; ++t) {
    std::vector<double> x(4);
    for (auto& v : x) v = 3.0 * rng.normal();
    const lb::Vector s = model.forward(x);
    const int y = top_class({s.data(), 3});
    const double margin = score_margin({s.data(), 3}, y);
    EXPECT_DOUBLE_EQ(random_ball_attack(model, x, y, 0.0, 10, rng), margin);
    const double eps = margin / std::sqrt(2.0) * 0.99;
    EXPECT_GT(random_ball_attack(model, x, y, eps, 200, rng), 0.0);
  }
}

TEST(InputGradient, MatchesFiniteDifferences) {
  lb::RandomSource rng(29);
  for (LayerKind kind : {LayerKind::kAol, LayerKind::kCpl}) {
    Network net = random_net(rng, kind, Activation::kMaxMin, 5, 6, 3, 3);
    const InferenceModel model(net);
    std::vector<double> x(5);
    for (auto& v : x) v = rng.normal();
    const std::vector<double> cot = {1.0, -1.0, 0.5};
    const lb::Vector g = model.input_gradient(x, cot);
    for (int i = 0; i < 5; ++i) {
      auto xp = x, xm = x;
      xp[i] += 1e-6;
      xm[i] -= 1e-6;
      const lb::Vector d = (model.forward(xp) - model.forward(xm)) / 2e-6;
      const double fd = d.dot(lb::Vector::Map(cot.data(), 3));
      EXPECT_LE(relative_error(fd, g[i]), 1e-5);
    }
  }
}
