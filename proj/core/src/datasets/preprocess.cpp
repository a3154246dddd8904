#include "lipbench/datasets/preprocess.hpp"

#include <numeric>
#include <string>

#include "lipbench/errors.hpp"

namespace lipbench {
namespace {

LabeledDataset subtract_channel_means(const LabeledDataset& ds, const std::vector<double>& means) {
  Matrix f = ds.features();
  const int plane = ds.shape().plane();
  for (int c = 0; c < ds.shape().channels; ++c) {
    f.middleCols(static_cast<Eigen::Index>(c) * plane, plane).array() -= means[c];
  }
  return LabeledDataset(std::move(f), ds.labels(), ds.shape(), ds.class_count());
}

}  // namespace

CenteredData preprocess_center(const LabeledDataset& train,
                               std::span<const LabeledDataset> apply_to) {
  for (const auto& other : apply_to) {
    if (other.shape() != train.shape()) {
      throw ShapeError("preprocess_center: datasets do not share an image shape");
    }
  }
  const ImageShape& shape = train.shape();
  const int plane = shape.plane();
  std::vector<double> means(static_cast<std::size_t>(shape.channels));
  for (int c = 0; c < shape.channels; ++c) {
    means[c] = train.features().middleCols(static_cast<Eigen::Index>(c) * plane, plane).mean();
  }

  CenteredData out{subtract_channel_means(train, means), {}, means};
  out.others.reserve(apply_to.size());
  for (const auto& other : apply_to) out.others.push_back(subtract_channel_means(other, means));
  return out;
}

LabeledDataset pad_mnist_to_32(const LabeledDataset& ds) {
  if (ds.shape() != ImageShape{1, 28, 28}) {
    throw ShapeError("pad_mnist_to_32: expected (1, 28, 28) images");
  }
  Matrix out = Matrix::Zero(ds.size(), 32 * 32);
  for (Eigen::Index i = 0; i < ds.size(); ++i) {
    for (int r = 0; r < 28; ++r) {
      out.row(i).segment((r + 2) * 32 + 2, 28) = ds.features().row(i).segment(r * 28, 28);
    }
  }
  return LabeledDataset(std::move(out), ds.labels(), ImageShape{1, 32, 32}, ds.class_count());
}

std::vector<std::size_t> subsample_indices(std::size_t population, std::size_t n,
                                           std::uint64_t seed) {
  if (n < 1 || n > population) {
    throw ConfigError("subsample: n = " + std::to_string(n) + " outside [1, " +
                      std::to_string(population) + "]");
  }
  std::vector<std::size_t> perm(population);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  // Full Fisher-Yates independent of n, so prefixes nest across sizes.
  RandomSource rng = RandomSource(seed).split("subsample");
  for (std::size_t i = population - 1; i > 0; --i) {
    const auto j = static_cast<std::size_t>(rng.uniform_index(i + 1));
    std::swap(perm[i], perm[j]);
  }
  perm.resize(n);
  return perm;
}

LabeledDataset subsample(const LabeledDataset& ds, std::size_t n, std::uint64_t seed) {
  const auto idx = subsample_indices(static_cast<std::size_t>(ds.size()), n, seed);
  return ds.select(idx);
}

void AugmentConfig::validate(const ImageShape& shape) const {
  if (crop_padding < 0) throw ConfigError("augment: crop_padding must be >= 0");
  if (random_erase) {
    if (erase_min < 1 || erase_max < erase_min) {
      throw ConfigError("augment: erase patch range must satisfy 1 <= min <= max");
    }
    if (erase_max > shape.height || erase_max > shape.width) {
      throw ConfigError("augment: erase patch does not fit inside the image");
    }
  }
}

std::vector<double> crop_at(std::span<const double> image, const ImageShape& shape, int padding,
                            int offset_y, int offset_x) {
  std::vector<double> out(image.size(), 0.0);
  const int h = shape.height;
  const int w = shape.width;
  for (int c = 0; c < shape.channels; ++c) {
    const std::size_t base = static_cast<std::size_t>(c) * shape.plane();
    for (int r = 0; r < h; ++r) {
      const int src_r = r + offset_y - padding;
      if (src_r < 0 || src_r >= h) continue;
      for (int col = 0; col < w; ++col) {
        const int src_c = col + offset_x - padding;
        if (src_c < 0 || src_c >= w) continue;
        out[base + static_cast<std::size_t>(r) * w + col] =
            image[base + static_cast<std::size_t>(src_r) * w + src_c];
      }
    }
  }
  return out;
}

std::vector<double> flip_horizontal(std::span<const double> image, const ImageShape& shape) {
  std::vector<double> out(image.begin(), image.end());
  const int w = shape.width;
  for (int c = 0; c < shape.channels; ++c) {
    for (int r = 0; r < shape.height; ++r) {
      const std::size_t row = static_cast<std::size_t>(c) * shape.plane() +
                              static_cast<std::size_t>(r) * w;
      for (int col = 0; col < w; ++col) out[row + col] = image[row + (w - 1 - col)];
    }
  }
  return out;
}

std::vector<double> erase_patch(std::span<const double> image, const ImageShape& shape, int top,
                                int left, int patch_h, int patch_w) {
  std::vector<double> out(image.begin(), image.end());
  for (int c = 0; c < shape.channels; ++c) {
    for (int r = top; r < top + patch_h && r < shape.height; ++r) {
      for (int col = left; col < left + patch_w && col < shape.width; ++col) {
        out[static_cast<std::size_t>(c) * shape.plane() + static_cast<std::size_t>(r) * shape.width +
            col] = 0.0;
      }
    }
  }
  return out;
}

std::vector<double> augment(std::span<const double> image, const ImageShape& shape,
                            const AugmentConfig& cfg, RandomSource& rng) {
  if (image.size() != static_cast<std::size_t>(shape.size())) {
    throw ShapeError("augment: image does not match shape");
  }
  std::vector<double> x(image.begin(), image.end());
  if (cfg.random_crop && cfg.crop_padding > 0) {
    const auto span = static_cast<std::uint64_t>(2 * cfg.crop_padding + 1);
    const int oy = static_cast<int>(rng.uniform_index(span));
    const int ox = static_cast<int>(rng.uniform_index(span));
    x = crop_at(x, shape, cfg.crop_padding, oy, ox);
  }
  if (cfg.horizontal_flip && rng.coin()) x = flip_horizontal(x, shape);
  if (cfg.random_erase) {
    const auto range = static_cast<std::uint64_t>(cfg.erase_max - cfg.erase_min + 1);
    const int ph = cfg.erase_min + static_cast<int>(rng.uniform_index(range));
    const int pw = cfg.erase_min + static_cast<int>(rng.uniform_index(range));
    const int top = static_cast<int>(rng.uniform_index(static_cast<std::uint64_t>(shape.height - ph + 1)));
    const int left = static_cast<int>(rng.uniform_index(static_cast<std::uint64_t>(shape.width - pw + 1)));
    x = erase_patch(x, shape, top, left, ph, pw);
  }
  return x;
}

}  // namespace lipbench
