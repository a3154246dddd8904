#include "lipbench/lipnet/loss.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "lipbench/errors.hpp"

namespace lipbench::lipnet {
namespace {

// CE(softmax(z), y); writes softmax(z) - onehot(y) into g.
double cross_entropy(std::span<const double> z, int y, std::span<double> g) {
  const double top = *std::max_element(z.begin(), z.end());
  double sum = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) {
    g[i] = std::exp(z[i] - top);
    sum += g[i];
  }
  for (auto& v : g) v /= sum;
  g[static_cast<std::size_t>(y)] -= 1.0;
  return std::log(sum) + top - z[static_cast<std::size_t>(y)];
}

}  // namespace

std::string_view to_string(LossKind kind) {
  switch (kind) {
    case LossKind::kTemperatureCe: return "temperature-ce";
    case LossKind::kOffsetCe: return "offset-ce";
    case LossKind::kSelfNormCe: return "selfnorm-ce";
  }
  return "?";
}

LossKind parse_loss_kind(std::string_view name) {
  if (name == "temperature-ce") return LossKind::kTemperatureCe;
  if (name == "offset-ce") return LossKind::kOffsetCe;
  if (name == "selfnorm-ce") return LossKind::kSelfNormCe;
  throw ConfigError("unknown loss '" + std::string(name) + "'");
}

void LossSpec::validate() const {
  if (kind != LossKind::kSelfNormCe && !(temperature > 0.0)) {
    throw ConfigError("loss: temperature must be positive");
  }
  if (kind == LossKind::kSelfNormCe && !(tradeoff >= 0.0)) {
    throw ConfigError("loss: tradeoff must be non-negative");
  }
}

double loss_value(const LossSpec& spec, std::span<const double> scores, int label) {
  std::vector<double> grad(scores.size());
  return loss_and_gradient(spec, scores, label, grad);
}

double loss_and_gradient(const LossSpec& spec, std::span<const double> scores, int label,
                         std::span<double> grad) {
  const std::size_t k = scores.size();
  if (label < 0 || static_cast<std::size_t>(label) >= k) throw ShapeError("loss: label out of range");
  if (grad.size() != k) throw ShapeError("loss: gradient buffer size");
  std::vector<double> z(k);
  const auto y = static_cast<std::size_t>(label);

  switch (spec.kind) {
    case LossKind::kTemperatureCe:
    case LossKind::kOffsetCe: {
      const double offset = spec.kind == LossKind::kOffsetCe ? spec.offset : 0.0;
      for (std::size_t i = 0; i < k; ++i) z[i] = scores[i] / spec.temperature;
      z[y] -= offset / spec.temperature;
      const double loss = cross_entropy(z, label, grad);
      for (auto& g : grad) g /= spec.temperature;
      return loss;
    }
    case LossKind::kSelfNormCe: {
      double mean = 0.0;
      for (double s : scores) mean += s;
      mean /= static_cast<double>(k);
      double var = 0.0;
      for (double s : scores) var += (s - mean) * (s - mean);
      const double sd = std::sqrt(var / static_cast<double>(k));
      const double raw = sd + spec.tradeoff;
      const bool floored = raw < kSelfNormFloor;
      const double denom = floored ? kSelfNormFloor : raw;
      for (std::size_t i = 0; i < k; ++i) z[i] = scores[i] / denom;
      z[y] -= 1.0;
      std::vector<double> gz(k);
      const double loss = cross_entropy(z, label, gz);
      double dot = 0.0;
      for (std::size_t i = 0; i < k; ++i) dot += gz[i] * scores[i];
      for (std::size_t i = 0; i < k; ++i) {
        double g = gz[i] / denom;
        if (!floored && sd > 0.0) {
          const double dsd = (scores[i] - mean) / (static_cast<double>(k) * sd);
          g -= dot / (denom * denom) * dsd;
        }
        grad[i] = g;
      }
      return loss;
    }
  }
  return 0.0;
}

}  // namespace lipbench::lipnet
