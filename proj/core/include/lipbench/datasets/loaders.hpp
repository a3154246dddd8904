#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "lipbench/datasets/dataset.hpp"

namespace lipbench {

using ByteSpan = std::span<const std::uint8_t>;

inline constexpr std::uint32_t kIdxImageMagic = 0x00000803;  // 2051
inline constexpr std::uint32_t kIdxLabelMagic = 0x00000801;  // 2049
inline constexpr std::size_t kCifarRecordBytes = 3073;

/// IDX image + label files. Pixels are divided by 255; class_count is the
/// largest label plus one.
LabeledDataset load_idx(ByteSpan image_bytes, ByteSpan label_bytes);

/// Labels from an IDX label stream alone.
std::vector<int> parse_idx_labels(ByteSpan label_bytes);

/// CIFAR-10 binary batches: records of one label byte and 3072 pixel bytes
/// (R, G, B planes, row-major). Shape (3, 32, 32), ten classes.
LabeledDataset load_cifar10_binary(std::span<const std::vector<std::uint8_t>> batches);

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path);

/// MNIST from a directory with the four standard ubyte files.
struct TrainTestSplit {
  LabeledDataset train;
  LabeledDataset test;
};
TrainTestSplit load_mnist_dir(const std::filesystem::path& dir);

/// CIFAR-10 from a directory with data_batch_{1..5}.bin and test_batch.bin.
TrainTestSplit load_cifar10_dir(const std::filesystem::path& dir);

}  // namespace lipbench
