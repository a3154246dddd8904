#include "lipbench/lipnet/train.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "lipbench/errors.hpp"

namespace lipbench::lipnet {

OneCycleSchedule::OneCycleSchedule(double peak, std::int64_t total_steps)
    : peak_(peak), total_(total_steps) {
  if (!(peak > 0.0) || !std::isfinite(peak)) throw ConfigError("schedule: peak lr must be > 0");
  if (total_steps < 1) throw ConfigError("schedule: total steps must be >= 1");
  warmup_ = std::max<std::int64_t>(1, std::llround(kWarmupFraction * static_cast<double>(total_)));
  warmup_ = std::min(warmup_, total_);
}

double OneCycleSchedule::operator()(std::int64_t step) const {
  const double start = peak_ / kStartDivisor;
  const double end = peak_ / kEndDivisor;
  if (step <= 0) return start;
  if (step < warmup_) {
    return start + (peak_ - start) * static_cast<double>(step) / static_cast<double>(warmup_);
  }
  const std::int64_t decay = total_ - 1 - warmup_;
  if (decay <= 0 || step >= total_ - 1) return step == warmup_ ? peak_ : end;
  const double t = static_cast<double>(step - warmup_) / static_cast<double>(decay);
  return peak_ + (end - peak_) * t;
}

void TrainConfig::validate() const {
  if (epochs < 1) throw ConfigError("train: epochs must be >= 1");
  if (batch_size < 1) throw ConfigError("train: batch size must be >= 1");
  if (!(peak_lr > 0.0)) throw ConfigError("train: peak lr must be > 0");
  if (momentum < 0.0 || momentum >= 1.0) throw ConfigError("train: momentum must be in [0, 1)");
  if (input_noise < 0.0) throw ConfigError("train: input noise must be >= 0");
  if (epsilon < 0.0) throw ConfigError("train: epsilon must be >= 0");
  loss.validate();
}

std::int64_t steps_per_epoch(std::int64_t n, int batch_size) {
  return (n + batch_size - 1) / batch_size;
}

namespace {

bool all_finite(const Network& net) {
  for (const auto& l : net.layers()) {
    if (!l.weight.allFinite() || !l.bias.allFinite()) return false;
  }
  return true;
}

}  // namespace

std::vector<EpochStats> train(Network& net, const LabeledDataset& data, const TrainConfig& cfg,
                              const EpochCallback& on_epoch) {
  cfg.validate();
  if (data.dim() != net.input_dim()) throw ShapeError("train: data width != network input width");
  if (cfg.augment.any()) cfg.augment.validate(data.shape());

  const Eigen::Index n = data.size();
  const std::int64_t per_epoch = steps_per_epoch(n, cfg.batch_size);
  const OneCycleSchedule schedule(cfg.peak_lr, per_epoch * cfg.epochs);
  const RandomSource root(cfg.seed);
  const RandomSource order_root = root.split("order");
  const RandomSource augment_root = root.split("augment");
  const RandomSource noise_root = root.split("noise");

  std::vector<LayerGradient> velocity(net.layers().size());
  for (std::size_t l = 0; l < velocity.size(); ++l) {
    velocity[l].weight = Matrix::Zero(net.layers()[l].weight.rows(), net.layers()[l].weight.cols());
    velocity[l].bias = Vector::Zero(net.layers()[l].bias.size());
  }

  std::vector<std::size_t> order(static_cast<std::size_t>(n));
  std::vector<EpochStats> history;
  std::int64_t step = 0;
  const double mu = cfg.momentum;
  const double needed = std::sqrt(2.0) * cfg.epsilon;

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    RandomSource order_rng = order_root.split(static_cast<std::uint64_t>(epoch));
    for (std::size_t i = order.size(); i > 1; --i) {
      std::swap(order[i - 1], order[order_rng.uniform_index(i)]);
    }

    EpochStats stats;
    stats.epoch = epoch + 1;
    double loss_sum = 0.0;
    std::size_t correct = 0;
    std::size_t certified = 0;

    for (std::int64_t b = 0; b < per_epoch; ++b, ++step) {
      const Eigen::Index begin = b * cfg.batch_size;
      const Eigen::Index rows = std::min<Eigen::Index>(cfg.batch_size, n - begin);
      Matrix x(rows, data.dim());
      std::vector<int> y(static_cast<std::size_t>(rows));
      for (Eigen::Index r = 0; r < rows; ++r) {
        const std::size_t src = order[static_cast<std::size_t>(begin + r)];
        y[static_cast<std::size_t>(r)] = data.labels()[src];
        if (cfg.augment.any()) {
          RandomSource rng = augment_root.split(static_cast<std::uint64_t>(step)).split(
              static_cast<std::uint64_t>(r));
          const auto row = data.features().row(static_cast<Eigen::Index>(src));
          const auto out = augment({row.data(), static_cast<std::size_t>(row.size())},
                                   data.shape(), cfg.augment, rng);
          x.row(r) = Eigen::Map<const RowVector>(out.data(), static_cast<Eigen::Index>(out.size()));
        } else {
          x.row(r) = data.features().row(static_cast<Eigen::Index>(src));
        }
      }
      if (cfg.input_noise > 0.0) {
        RandomSource rng = noise_root.split(static_cast<std::uint64_t>(step));
        for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] += cfg.input_noise * rng.normal();
      }

      const SpectralScales scales = refresh_spectral(net);
      Gradients grads = backward(net, x, y, cfg.loss, scales);
      if (!std::isfinite(grads.loss)) {
        throw DivergenceError("training diverged: non-finite loss at epoch " +
                              std::to_string(epoch + 1) + ", step " + std::to_string(step));
      }
      loss_sum += grads.loss * static_cast<double>(rows);
      for (Eigen::Index r = 0; r < rows; ++r) {
        const std::span<const double> s(grads.scores.row(r).data(),
                                        static_cast<std::size_t>(grads.scores.cols()));
        const int label = y[static_cast<std::size_t>(r)];
        correct += top_class(s) == label;
        certified += score_margin(s, label) > needed;
      }

      const double lr = schedule(step);
      stats.last_lr = lr;
      for (std::size_t l = 0; l < velocity.size(); ++l) {
        DenseLayer& layer = net.layers()[l];
        LayerGradient& v = velocity[l];
        const LayerGradient& g = grads.layers[l];
        v.weight = mu * v.weight + g.weight;
        v.bias = mu * v.bias + g.bias;
        layer.weight -= lr * (g.weight + mu * v.weight);
        layer.bias -= lr * (g.bias + mu * v.bias);
      }
    }
    if (!all_finite(net)) {
      throw DivergenceError("training diverged: non-finite parameters after epoch " +
                            std::to_string(epoch + 1));
    }
    const double count = static_cast<double>(n);
    stats.loss = loss_sum / count;
    stats.accuracy = static_cast<double>(correct) / count;
    stats.cra = static_cast<double>(certified) / count;
    history.push_back(stats);
    if (on_epoch && !on_epoch(stats, net)) break;
  }
  return history;
}

std::vector<double> default_lr_grid() {
  std::vector<double> grid;
  for (int k = 0; k <= 6; ++k) grid.push_back(std::pow(10.0, -3.0 + 0.5 * k));
  return grid;
}

LrSearchResult select_peak_lr(const std::function<Network()>& make_net,
                              const LabeledDataset& train_data,
                              const LabeledDataset& validation, const TrainConfig& cfg,
                              std::span<const double> grid) {
  if (grid.empty()) throw ConfigError("select_peak_lr: empty grid");
  LrSearchResult result;
  result.grid.assign(grid.begin(), grid.end());
  double best = -2.0;
  for (double lr : grid) {
    TrainConfig run = cfg;
    run.peak_lr = lr;
    Network net = make_net();
    double score = -1.0;
    try {
      train(net, train_data, run);
      score = evaluate(InferenceModel(net), validation, cfg.epsilon).cra;
    } catch (const DivergenceError&) {
    }
    result.validation_cra.push_back(score);
    if (score > best) {
      best = score;
      result.best_lr = lr;
    }
  }
  return result;
}

}  // namespace lipbench::lipnet
