#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "lipbench/datasets/dataset.hpp"
#include "lipbench/numerics/random.hpp"

namespace lipbench {

struct CenteredData {
  LabeledDataset train;
  std::vector<LabeledDataset> others;
  std::vector<double> channel_means;
};

/// Subtracts the per-channel mean of `train` from `train` and every dataset
/// in `apply_to`. No variance rescaling.
CenteredData preprocess_center(const LabeledDataset& train,
                               std::span<const LabeledDataset> apply_to = {});

/// Zero-pads (1, 28, 28) images to (1, 32, 32), content at offset (2, 2).
LabeledDataset pad_mnist_to_32(const LabeledDataset& ds);

/// First n entries of a seeded permutation of [0, ds.size()). Prefixes of
/// the same seed nest.
std::vector<std::size_t> subsample_indices(std::size_t population, std::size_t n,
                                           std::uint64_t seed);
LabeledDataset subsample(const LabeledDataset& ds, std::size_t n, std::uint64_t seed);

/// Random-crop / flip / erase configuration.
struct AugmentConfig {
  int crop_padding = 4;
  bool random_crop = false;
  bool horizontal_flip = false;
  bool random_erase = false;
  int erase_min = 4;
  int erase_max = 8;

  /// Throws ConfigError when a switch cannot apply to `shape`.
  void validate(const ImageShape& shape) const;
  bool any() const { return random_crop || horizontal_flip || random_erase; }
};

/// Zero-pad by `padding`, then take the original-size window whose top-left
/// corner sits at (offset_y, offset_x) in padded coordinates.
std::vector<double> crop_at(std::span<const double> image, const ImageShape& shape, int padding,
                            int offset_y, int offset_x);
std::vector<double> flip_horizontal(std::span<const double> image, const ImageShape& shape);
std::vector<double> erase_patch(std::span<const double> image, const ImageShape& shape, int top,
                                int left, int patch_h, int patch_w);

/// Applies the enabled transforms in order crop, flip, erase. Flip fires with
/// probability 1/2; crop offsets and the erased rectangle are uniform.
std::vector<double> augment(std::span<const double> image, const ImageShape& shape,
                            const AugmentConfig& cfg, RandomSource& rng);

}  // namespace lipbench
