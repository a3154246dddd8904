#pragma once

#include <span>
#include <string_view>

namespace lipbench::lipnet {

enum class LossKind { kTemperatureCe, kOffsetCe, kSelfNormCe };

std::string_view to_string(LossKind kind);
LossKind parse_loss_kind(std::string_view name);

/// TemperatureCE: CE(softmax(s / T), y)
/// OffsetCE:      CE(softmax((s - o * onehot(y)) / T), y)
/// SelfNormCE:    CE(softmax(s / (std(s) + t) - onehot(y)), y), population std,
///                denominator floored at 1e-12.
struct LossSpec {
  LossKind kind = LossKind::kOffsetCe;
  double offset = 0.25;
  double temperature = 0.25;
  double tradeoff = 0.1;

  void validate() const;
};

inline constexpr double kSelfNormFloor = 1e-12;

double loss_value(const LossSpec& spec, std::span<const double> scores, int label);

/// Loss and its gradient with respect to the scores (written to `grad`).
double loss_and_gradient(const LossSpec& spec, std::span<const double> scores, int label,
                         std::span<double> grad);

}  // namespace lipbench::lipnet
