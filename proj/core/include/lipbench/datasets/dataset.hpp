#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "lipbench/numerics/matrix.hpp"

namespace lipbench {

struct ImageShape {
  int channels = 1;
  int height = 1;
  int width = 1;

  int size() const { return channels * height * width; }
  int plane() const { return height * width; }
  friend bool operator==(const ImageShape&, const ImageShape&) = default;
};

/// Flattened samples (one row each) with integer labels in [0, class_count).
///
/// Features of image-backed data are laid out channel-major (C, H, W), the
/// layout of both IDX and CIFAR binary records.
class LabeledDataset {
 public:
  LabeledDataset(Matrix features, std::vector<int> labels, ImageShape shape, int class_count);

  /// Non-image data: shape (1, 1, cols).
  static LabeledDataset from_vectors(Matrix features, std::vector<int> labels, int class_count);

  const Matrix& features() const { return features_; }
  const std::vector<int>& labels() const { return labels_; }
  const ImageShape& shape() const { return shape_; }
  int class_count() const { return class_count_; }
  Eigen::Index size() const { return features_.rows(); }
  Eigen::Index dim() const { return features_.cols(); }

  /// Rows picked in the given order.
  LabeledDataset select(std::span<const std::size_t> indices) const;

  friend bool operator==(const LabeledDataset& a, const LabeledDataset& b);

 private:
  Matrix features_;
  std::vector<int> labels_;
  ImageShape shape_;
  int class_count_;
};

/// Binary cache: "LBDS1", then u64 n, u64 dim, i32 channels/height/width,
/// i32 class_count, n*dim little-endian f64, n little-endian i32 labels.
void write_cache(std::ostream& out, const LabeledDataset& ds);
LabeledDataset read_cache(std::istream& in);

}  // namespace lipbench
