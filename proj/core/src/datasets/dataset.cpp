#include "lipbench/datasets/dataset.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cstring>
#include <istream>
#include <ostream>
#include <string>

#include "lipbench/errors.hpp"

namespace lipbench {

const char* to_string(ParseErrorKind kind) {
  switch (kind) {
    case ParseErrorKind::kBadMagic: return "bad magic";
    case ParseErrorKind::kTruncated: return "truncated stream";
    case ParseErrorKind::kCountMismatch: return "count mismatch";
    case ParseErrorKind::kBadLength: return "bad length";
    case ParseErrorKind::kBadLabel: return "bad label";
    case ParseErrorKind::kEmpty: return "empty dataset";
  }
  return "parse error";
}

LabeledDataset::LabeledDataset(Matrix features, std::vector<int> labels, ImageShape shape,
                               int class_count)
    : features_(std::move(features)),
      labels_(std::move(labels)),
      shape_(shape),
      class_count_(class_count) {
  if (features_.rows() < 1) throw ShapeError("LabeledDataset: needs at least one sample");
  if (static_cast<Eigen::Index>(labels_.size()) != features_.rows()) {
    throw ShapeError("LabeledDataset: label count differs from row count");
  }
  if (shape_.size() != features_.cols()) {
    throw ShapeError("LabeledDataset: image shape does not match feature width");
  }
  if (class_count_ < 1) throw ShapeError("LabeledDataset: class_count must be positive");
  for (int y : labels_) {
    if (y < 0 || y >= class_count_) throw ShapeError("LabeledDataset: label out of range");
  }
}

LabeledDataset LabeledDataset::from_vectors(Matrix features, std::vector<int> labels,
                                            int class_count) {
  const ImageShape shape{1, 1, static_cast<int>(features.cols())};
  return LabeledDataset(std::move(features), std::move(labels), shape, class_count);
}

LabeledDataset LabeledDataset::select(std::span<const std::size_t> indices) const {
  Matrix rows(static_cast<Eigen::Index>(indices.size()), features_.cols());
  std::vector<int> labels(indices.size());
  for (std::size_t i = 0; i < indices.size(); ++i) {
    const auto src = static_cast<Eigen::Index>(indices[i]);
    if (src >= features_.rows()) throw ShapeError("LabeledDataset::select: index out of range");
    rows.row(static_cast<Eigen::Index>(i)) = features_.row(src);
    labels[i] = labels_[indices[i]];
  }
  return LabeledDataset(std::move(rows), std::move(labels), shape_, class_count_);
}

bool operator==(const LabeledDataset& a, const LabeledDataset& b) {
  if (a.shape_ != b.shape_ || a.class_count_ != b.class_count_ || a.labels_ != b.labels_) {
    return false;
  }
  if (a.features_.rows() != b.features_.rows() || a.features_.cols() != b.features_.cols()) {
    return false;
  }
  return std::memcmp(a.features_.data(), b.features_.data(),
                     sizeof(double) * static_cast<std::size_t>(a.features_.size())) == 0;
}

namespace {

constexpr std::array<char, 5> kCacheMagic = {'L', 'B', 'D', 'S', '1'};

template <typename T>
void put_le(std::ostream& out, T value) {
  static_assert(std::is_trivially_copyable_v<T>);
  std::array<char, sizeof(T)> bytes;
  std::memcpy(bytes.data(), &value, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes.begin(), bytes.end());
  out.write(bytes.data(), sizeof(T));
}

template <typename T>
T get_le(std::istream& in) {
  std::array<char, sizeof(T)> bytes;
  if (!in.read(bytes.data(), sizeof(T))) {
    throw ParseError(ParseErrorKind::kTruncated, "dataset cache ended early");
  }
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes.begin(), bytes.end());
  T value;
  std::memcpy(&value, bytes.data(), sizeof(T));
  return value;
}

}  // namespace

void write_cache(std::ostream& out, const LabeledDataset& ds) {
  out.write(kCacheMagic.data(), kCacheMagic.size());
  put_le<std::uint64_t>(out, static_cast<std::uint64_t>(ds.size()));
  put_le<std::uint64_t>(out, static_cast<std::uint64_t>(ds.dim()));
  put_le<std::int32_t>(out, ds.shape().channels);
  put_le<std::int32_t>(out, ds.shape().height);
  put_le<std::int32_t>(out, ds.shape().width);
  put_le<std::int32_t>(out, ds.class_count());
  const Matrix& f = ds.features();
  for (Eigen::Index i = 0; i < f.size(); ++i) put_le<double>(out, f.data()[i]);
  for (int y : ds.labels()) put_le<std::int32_t>(out, y);
}

LabeledDataset read_cache(std::istream& in) {
  std::array<char, 5> magic{};
  if (!in.read(magic.data(), magic.size())) {
    throw ParseError(ParseErrorKind::kTruncated, "dataset cache header missing");
  }
  if (magic != kCacheMagic) throw ParseError(ParseErrorKind::kBadMagic, "not an LBDS1 cache");
  const auto n = get_le<std::uint64_t>(in);
  const auto dim = get_le<std::uint64_t>(in);
  ImageShape shape;
  shape.channels = get_le<std::int32_t>(in);
  shape.height = get_le<std::int32_t>(in);
  shape.width = get_le<std::int32_t>(in);
  const auto classes = get_le<std::int32_t>(in);
  if (n == 0) throw ParseError(ParseErrorKind::kEmpty, "dataset cache holds no samples");
  if (static_cast<std::uint64_t>(shape.size()) != dim) {
    throw ParseError(ParseErrorKind::kCountMismatch, "cache shape disagrees with width");
  }
  Matrix f(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(dim));
  for (Eigen::Index i = 0; i < f.size(); ++i) f.data()[i] = get_le<double>(in);
  std::vector<int> labels(n);
  for (auto& y : labels) y = get_le<std::int32_t>(in);
  return LabeledDataset(std::move(f), std::move(labels), shape, classes);
}

}  // namespace lipbench
