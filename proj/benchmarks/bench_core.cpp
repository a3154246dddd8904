#include <benchmark/benchmark.h>

#include <vector>

#include "lipbench/cover/cover.hpp"
#include "lipbench/experiments/profile.hpp"
#include "lipbench/lipnet/layers.hpp"
#include "lipbench/lipnet/network.hpp"
#include "lipbench/numerics/linalg.hpp"
#include "lipbench/numerics/random.hpp"
#include "lipbench/smoothing/smoothing.hpp"

namespace lb = lipbench;
namespace ln = lipbench::lipnet;

namespace {

lb::Matrix gaussian(lb::RandomSource& rng, Eigen::Index r, Eigen::Index c) {
  lb::Matrix m(r, c);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = rng.normal();
  return m;
}

lb::Matrix covariance(Eigen::Index d) {
  lb::RandomSource rng(1);
  const lb::Matrix x = gaussian(rng, 2 * d, d);
  return x.transpose() * x / static_cast<double>(2 * d);
}

void BM_SymEig(benchmark::State& state) {
  const lb::Matrix s = covariance(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(lb::sym_eig(s).eigenvalues.data());
}
BENCHMARK(BM_SymEig)->Arg(32)->Arg(128)->Arg(256)->Unit(benchmark::kMillisecond);

void BM_PowerIteration(benchmark::State& state) {
  lb::RandomSource rng(2);
  const lb::Matrix w = gaussian(rng, state.range(0), state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(lb::power_iteration(w, 100, 1e-10).sigma_max);
}
BENCHMARK(BM_PowerIteration)->Arg(256)->Arg(1024)->Unit(benchmark::kMicrosecond);

void BM_AolScales(benchmark::State& state) {
  lb::RandomSource rng(3);
  const lb::Matrix w = gaussian(rng, state.range(0), state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(ln::aol_scales(w).data());
}
BENCHMARK(BM_AolScales)->Arg(256)->Arg(1024)->Unit(benchmark::kMicrosecond);

// One training step's worth of work: forward and backward on a batch.
void BM_Backward(benchmark::State& state) {
  lb::RandomSource rng(4);
  const ln::MlpSpec spec{1024, static_cast<int>(state.range(0)), 8, 10,
                         state.range(1) ? ln::LayerKind::kCpl : ln::LayerKind::kAol,
                         ln::Activation::kMaxMin, ln::InitScheme::kOrthogonal};
  ln::Network net = ln::make_mlp(spec, rng);
  const lb::Matrix x = gaussian(rng, 256, 1024);
  std::vector<int> y(256);
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = static_cast<int>(i % 10);
  const ln::LossSpec loss;
  for (auto _ : state) {
    const auto scales = ln::refresh_spectral(net);
    benchmark::DoNotOptimize(ln::backward(net, x, y, loss, scales).loss);
  }
  state.SetItemsProcessed(state.iterations() * 256);
}
BENCHMARK(BM_Backward)->Args({256, 0})->Args({256, 1})->Args({1024, 0})->Unit(benchmark::kMillisecond);

void BM_InferenceForward(benchmark::State& state) {
  lb::RandomSource rng(5);
  const ln::MlpSpec spec{1024, 256, 8, 10, ln::LayerKind::kAol, ln::Activation::kMaxMin, ln::InitScheme::kOrthogonal};
  const ln::InferenceModel model(ln::make_mlp(spec, rng));
  const lb::Matrix x = gaussian(rng, 1024, 1024);
  for (auto _ : state) benchmark::DoNotOptimize(model.forward(x).data());
  state.SetItemsProcessed(state.iterations() * 1024);
}
BENCHMARK(BM_InferenceForward)->Unit(benchmark::kMillisecond);

void BM_NearestNeighborRadius(benchmark::State& state) {
  namespace cv = lb::cover;
  lb::RandomSource rng(6);
  const cv::MarginDistribution dist(2, 0.125, 0.5);
  const auto model = cv::OneNNModel::fit(cv::sample_margin(dist, static_cast<std::size_t>(state.range(0)), rng),
                                         cv::Metric::kLinf);
  std::vector<double> x = {0.3, 0.7};
  for (auto _ : state) benchmark::DoNotOptimize(cv::nn_certified_radius(model, x));
}
BENCHMARK(BM_NearestNeighborRadius)->Arg(2368)->Arg(20000)->Unit(benchmark::kMicrosecond);

void BM_DistanceProfile(benchmark::State& state) {
  lb::RandomSource rng(7);
  const lb::Matrix train = gaussian(rng, 8000, 1024);
  const lb::Matrix test = gaussian(rng, 50, 1024);
  const std::vector<std::size_t> sizes = {1000, 2000, 4000, 8000};
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        lb::experiments::nn_distance_profile(train, test, sizes, lb::experiments::ProfileMetric::kL2, 1).data());
  }
}
BENCHMARK(BM_DistanceProfile)->Unit(benchmark::kMillisecond);

void BM_SmoothedPredict(benchmark::State& state) {
  namespace sm = lb::smoothing;
  lb::RandomSource rng(8);
  const ln::MlpSpec spec{1024, 256, 8, 10, ln::LayerKind::kAol, ln::Activation::kMaxMin, ln::InitScheme::kOrthogonal};
  const ln::InferenceModel model(ln::make_mlp(spec, rng));
  const sm::BatchClassifier base = [&model](const lb::Matrix& batch) {
    const lb::Matrix s = model.forward(batch);
    std::vector<int> out(static_cast<std::size_t>(s.rows()));
    for (Eigen::Index i = 0; i < s.rows(); ++i) {
      Eigen::Index top;
      s.row(i).maxCoeff(&top);
      out[static_cast<std::size_t>(i)] = static_cast<int>(top);
    }
    return out;
  };
  sm::SmoothingConfig cfg;
  const std::vector<double> x(1024, 0.1);
  for (auto _ : state) benchmark::DoNotOptimize(sm::smoothed_predict(base, x, 10, cfg).top_class);
}
BENCHMARK(BM_SmoothedPredict)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
