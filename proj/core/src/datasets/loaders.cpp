#include "lipbench/datasets/loaders.hpp"

#include <algorithm>
#include <fstream>
#include <iterator>
#include <string>

#include "lipbench/errors.hpp"

namespace lipbench {
namespace {

std::uint32_t read_be32(ByteSpan bytes, std::size_t offset, const char* what) {
  if (bytes.size() < offset + 4) {
    throw ParseError(ParseErrorKind::kTruncated, std::string(what) + ": header cut short");
  }
  return (std::uint32_t{bytes[offset]} << 24) | (std::uint32_t{bytes[offset + 1]} << 16) |
         (std::uint32_t{bytes[offset + 2]} << 8) | std::uint32_t{bytes[offset + 3]};
}

}  // namespace

std::vector<int> parse_idx_labels(ByteSpan label_bytes) {
  if (read_be32(label_bytes, 0, "idx labels") != kIdxLabelMagic) {
    throw ParseError(ParseErrorKind::kBadMagic, "idx labels: expected magic 0x00000801");
  }
  const std::size_t count = read_be32(label_bytes, 4, "idx labels");
  if (label_bytes.size() < 8 + count) {
    throw ParseError(ParseErrorKind::kTruncated, "idx labels: fewer bytes than declared count");
  }
  std::vector<int> labels(count);
  for (std::size_t i = 0; i < count; ++i) labels[i] = label_bytes[8 + i];
  return labels;
}

LabeledDataset load_idx(ByteSpan image_bytes, ByteSpan label_bytes) {
  if (read_be32(image_bytes, 0, "idx images") != kIdxImageMagic) {
    throw ParseError(ParseErrorKind::kBadMagic, "idx images: expected magic 0x00000803");
  }
  const std::size_t count = read_be32(image_bytes, 4, "idx images");
  const std::size_t rows = read_be32(image_bytes, 8, "idx images");
  const std::size_t cols = read_be32(image_bytes, 12, "idx images");
  const std::size_t pixels = rows * cols;
  if (image_bytes.size() < 16 + count * pixels) {
    throw ParseError(ParseErrorKind::kTruncated, "idx images: fewer bytes than declared");
  }

  std::vector<int> labels = parse_idx_labels(label_bytes);
  if (labels.size() != count) {
    throw ParseError(ParseErrorKind::kCountMismatch,
                     "idx: " + std::to_string(count) + " images but " +
                         std::to_string(labels.size()) + " labels");
  }
  if (count == 0) throw ParseError(ParseErrorKind::kEmpty, "idx: no samples");

  Matrix features(static_cast<Eigen::Index>(count), static_cast<Eigen::Index>(pixels));
  const std::uint8_t* src = image_bytes.data() + 16;
  for (Eigen::Index i = 0; i < features.size(); ++i) features.data()[i] = src[i] / 255.0;

  const int classes = *std::max_element(labels.begin(), labels.end()) + 1;
  const ImageShape shape{1, static_cast<int>(rows), static_cast<int>(cols)};
  return LabeledDataset(std::move(features), std::move(labels), shape, classes);
}

LabeledDataset load_cifar10_binary(std::span<const std::vector<std::uint8_t>> batches) {
  std::size_t records = 0;
  for (const auto& batch : batches) {
    if (batch.size() % kCifarRecordBytes != 0) {
      throw ParseError(ParseErrorKind::kBadLength,
                       "cifar10: batch of " + std::to_string(batch.size()) +
                           " bytes is not a multiple of 3073");
    }
    records += batch.size() / kCifarRecordBytes;
  }
  if (records == 0) throw ParseError(ParseErrorKind::kEmpty, "cifar10: no records");

  constexpr Eigen::Index kPixels = 3072;
  Matrix features(static_cast<Eigen::Index>(records), kPixels);
  std::vector<int> labels(records);
  std::size_t row = 0;
  for (const auto& batch : batches) {
    for (std::size_t off = 0; off < batch.size(); off += kCifarRecordBytes, ++row) {
      const int label = batch[off];
      if (label >= 10) {
        throw ParseError(ParseErrorKind::kBadLabel,
                         "cifar10: label byte " + std::to_string(label) + " >= 10");
      }
      labels[row] = label;
      double* dst = features.row(static_cast<Eigen::Index>(row)).data();
      for (Eigen::Index p = 0; p < kPixels; ++p) dst[p] = batch[off + 1 + p] / 255.0;
    }
  }
  return LabeledDataset(std::move(features), std::move(labels), ImageShape{3, 32, 32}, 10);
}

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open " + path.string());
  return std::vector<std::uint8_t>(std::istreambuf_iterator<char>(in),
                                   std::istreambuf_iterator<char>());
}

TrainTestSplit load_mnist_dir(const std::filesystem::path& dir) {
  auto train_images = read_file_bytes(dir / "train-images-idx3-ubyte");
  auto train_labels = read_file_bytes(dir / "train-labels-idx1-ubyte");
  auto test_images = read_file_bytes(dir / "t10k-images-idx3-ubyte");
  auto test_labels = read_file_bytes(dir / "t10k-labels-idx1-ubyte");
  return {load_idx(train_images, train_labels), load_idx(test_images, test_labels)};
}

TrainTestSplit load_cifar10_dir(const std::filesystem::path& dir) {
  std::vector<std::vector<std::uint8_t>> train;
  for (int i = 1; i <= 5; ++i) {
    train.push_back(read_file_bytes(dir / ("data_batch_" + std::to_string(i) + ".bin")));
  }
  std::vector<std::vector<std::uint8_t>> test;
  test.push_back(read_file_bytes(dir / "test_batch.bin"));
  return {load_cifar10_binary(train), load_cifar10_binary(test)};
}

}  // namespace lipbench
