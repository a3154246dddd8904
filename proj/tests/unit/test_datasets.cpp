#include <gtest/gtest.h>

#include <algorithm>
#include <cstring>
#include <filesystem>
#include <functional>
#include <fstream>
#include <set>
#include <sstream>

#include "lipbench/datasets/dataset.hpp"
#include "lipbench/datasets/loaders.hpp"
#include "lipbench/datasets/preprocess.hpp"
#include "lipbench/errors.hpp"
#include "lipbench/numerics/random.hpp"

namespace lb = lipbench;

namespace {

using Bytes = std::vector<std::uint8_t>;

void put_be32(Bytes& b, std::uint32_t v) {
  for (int s = 24; s >= 0; s -= 8) b.push_back(static_cast<std::uint8_t>(v >> s));
}

Bytes idx_labels(const std::vector<std::uint8_t>& labels) {
  Bytes b;
  put_be32(b, lb::kIdxLabelMagic);
  put_be32(b, static_cast<std::uint32_t>(labels.size()));
  b.insert(b.end(), labels.begin(), labels.end());
  return b;
}

Bytes idx_images(std::uint32_t count, std::uint32_t rows, std::uint32_t cols,
                 const std::vector<std::uint8_t>& pixels) {
  Bytes b;
  put_be32(b, lb::kIdxImageMagic);
  put_be32(b, count);
  put_be32(b, rows);
  put_be32(b, cols);
  b.insert(b.end(), pixels.begin(), pixels.end());
  return b;
}

lb::ParseErrorKind parse_kind(const std::function<void()>& f) {
  try {
    f();
  } catch (const lb::ParseError& e) {
    return e.kind();
  }
  ADD_FAILURE() << "no ParseError thrown";
  return lb::ParseErrorKind::kEmpty;
}

lb::LabeledDataset random_images(lb::RandomSource& rng, int n, lb::ImageShape shape, int k) {
  lb::Matrix x(n, shape.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = rng.uniform();
  std::vector<int> y(static_cast<std::size_t>(n));
  for (auto& v : y) v = static_cast<int>(rng.uniform_index(static_cast<std::uint64_t>(k)));
  return lb::LabeledDataset(std::move(x), std::move(y), shape, k);
}

std::vector<double> row_of(const lb::LabeledDataset& ds, Eigen::Index i) {
  return {ds.features().row(i).data(), ds.features().row(i).data() + ds.dim()};
}

}  // namespace

TEST(Idx, LabelFixture) {
  const Bytes b = idx_labels({7, 3});
  ASSERT_EQ(b.size(), 10u);
  EXPECT_EQ(lb::parse_idx_labels(b), (std::vector<int>{7, 3}));
}

TEST(Idx, ImageFixture) {
  const lb::LabeledDataset ds = lb::load_idx(idx_images(1, 2, 2, {0, 255, 128, 64}), idx_labels({5}));
  ASSERT_EQ(ds.size(), 1);
  ASSERT_EQ(ds.dim(), 4);
  EXPECT_EQ(ds.features()(0, 0), 0.0);
  EXPECT_EQ(ds.features()(0, 1), 1.0);
  EXPECT_EQ(ds.features()(0, 2), 128.0 / 255.0);
  EXPECT_EQ(ds.features()(0, 3), 64.0 / 255.0);
  EXPECT_NEAR(ds.features()(0, 2), 0.50196, 1e-5);
  EXPECT_EQ(ds.labels()[0], 5);
  EXPECT_EQ(ds.class_count(), 6);
  EXPECT_EQ(ds.shape(), (lb::ImageShape{1, 2, 2}));
}

TEST(Idx, Errors) {
  const Bytes images2 = idx_images(2, 1, 1, {1, 2});
  EXPECT_EQ(parse_kind([&] { lb::load_idx(images2, idx_labels({0, 1, 2})); }),
            lb::ParseErrorKind::kCountMismatch);
  Bytes bad_magic = idx_labels({1});
  bad_magic[3] = 0x02;
  EXPECT_EQ(parse_kind([&] { lb::parse_idx_labels(bad_magic); }), lb::ParseErrorKind::kBadMagic);
  EXPECT_EQ(parse_kind([&] { lb::load_idx(idx_labels({1}), idx_labels({1})); }),
            lb::ParseErrorKind::kBadMagic);
  Bytes short_labels = idx_labels({1, 2, 3});
  short_labels.pop_back();
  EXPECT_EQ(parse_kind([&] { lb::parse_idx_labels(short_labels); }),
            lb::ParseErrorKind::kTruncated);
  EXPECT_EQ(parse_kind([&] { lb::parse_idx_labels(Bytes{0, 0, 8}); }),
            lb::ParseErrorKind::kTruncated);
  Bytes short_images = idx_images(1, 2, 2, {1, 2, 3});
  EXPECT_EQ(parse_kind([&] { lb::load_idx(short_images, idx_labels({0})); }),
            lb::ParseErrorKind::kTruncated);
  EXPECT_EQ(parse_kind([&] { lb::load_idx(idx_images(0, 2, 2, {}), idx_labels({})); }),
            lb::ParseErrorKind::kEmpty);
}

TEST(Cifar, SingleRecordFixture) {
  Bytes rec(lb::kCifarRecordBytes, 255);
  rec[0] = 9;
  const std::vector<Bytes> batches = {rec};
  const lb::LabeledDataset ds = lb::load_cifar10_binary(batches);
  ASSERT_EQ(ds.size(), 1);
  EXPECT_EQ(ds.labels()[0], 9);
  EXPECT_EQ(ds.class_count(), 10);
  EXPECT_EQ(ds.shape(), (lb::ImageShape{3, 32, 32}));
  EXPECT_TRUE((ds.features().array() == 1.0).all());
}

TEST(Cifar, PlaneLayoutPreservedAcrossBatches) {
  Bytes a(lb::kCifarRecordBytes, 0), b(lb::kCifarRecordBytes, 0);
  a[0] = 1;
  a[1 + 1024 + 5] = 51;  // green plane, pixel 5
  b[0] = 2;
  b[1 + 2048 + 1023] = 255;  // blue plane, last pixel
  const std::vector<Bytes> batches = {a, b};
  const lb::LabeledDataset ds = lb::load_cifar10_binary(batches);
  ASSERT_EQ(ds.size(), 2);
  EXPECT_EQ(ds.labels(), (std::vector<int>{1, 2}));
  EXPECT_EQ(ds.features()(0, 1024 + 5), 0.2);
  EXPECT_EQ(ds.features()(1, 3071), 1.0);
  EXPECT_EQ(ds.features().row(0).sum(), 0.2);
}

TEST(Cifar, Errors) {
  EXPECT_EQ(parse_kind([] {
              const std::vector<Bytes> none = {Bytes{}};
              lb::load_cifar10_binary(none);
            }),
            lb::ParseErrorKind::kEmpty);
  EXPECT_EQ(parse_kind([] {
              const std::vector<Bytes> odd = {Bytes(3074, 0)};
              lb::load_cifar10_binary(odd);
            }),
            lb::ParseErrorKind::kBadLength);
  EXPECT_EQ(parse_kind([] {
              Bytes rec(lb::kCifarRecordBytes, 0);
              rec[0] = 10;
              const std::vector<Bytes> bad = {rec};
              lb::load_cifar10_binary(bad);
            }),
            lb::ParseErrorKind::kBadLabel);
}

TEST(Loaders, MnistDirectory) {
  const auto dir = std::filesystem::temp_directory_path() / "lipbench_test_mnist";
  std::filesystem::create_directories(dir);
  const auto write = [&](const char* name, const Bytes& b) {
    std::ofstream(dir / name, std::ios::binary)
        .write(reinterpret_cast<const char*>(b.data()), static_cast<std::streamsize>(b.size()));
  };
  std::vector<std::uint8_t> pixels(2 * 28 * 28, 0);
  pixels[28 * 28] = 255;
  write("train-images-idx3-ubyte", idx_images(2, 28, 28, pixels));
  write("train-labels-idx1-ubyte", idx_labels({3, 9}));
  write("t10k-images-idx3-ubyte", idx_images(1, 28, 28, std::vector<std::uint8_t>(784, 51)));
  write("t10k-labels-idx1-ubyte", idx_labels({1}));
  const lb::TrainTestSplit split = lb::load_mnist_dir(dir);
  EXPECT_EQ(split.train.size(), 2);
  EXPECT_EQ(split.test.size(), 1);
  EXPECT_EQ(split.train.features()(1, 0), 1.0);
  EXPECT_EQ(split.test.features()(0, 100), 0.2);
  EXPECT_EQ(split.train.shape(), (lb::ImageShape{1, 28, 28}));
  std::filesystem::remove_all(dir);
  EXPECT_THROW(lb::load_mnist_dir(dir), lb::InputError);
}

TEST(LabeledDataset, Invariants) {
  EXPECT_THROW(lb::LabeledDataset::from_vectors(lb::Matrix(0, 2), {}, 2), lb::ShapeError);
  EXPECT_THROW(lb::LabeledDataset::from_vectors(lb::Matrix::Zero(2, 2), {0}, 2), lb::ShapeError);
  EXPECT_THROW(lb::LabeledDataset::from_vectors(lb::Matrix::Zero(1, 2), {2}, 2), lb::ShapeError);
  EXPECT_THROW(lb::LabeledDataset(lb::Matrix::Zero(1, 5), {0}, {1, 2, 2}, 1), lb::ShapeError);
  const auto ds = lb::LabeledDataset::from_vectors(lb::Matrix::Zero(1, 3), {0}, 1);
  EXPECT_EQ(ds.shape(), (lb::ImageShape{1, 1, 3}));
}

TEST(Cache, RoundTripIsBitIdentical) {
  lb::RandomSource rng(1);
  lb::LabeledDataset ds = random_images(rng, 7, {3, 2, 4}, 5);
  lb::Matrix x = ds.features();
  x(0, 0) = -0.0;
  x(1, 1) = 1e-310;
  x(2, 2) = -123456.789;
  ds = lb::LabeledDataset(x, ds.labels(), ds.shape(), ds.class_count());
  std::stringstream buf;
  lb::write_cache(buf, ds);
  const lb::LabeledDataset back = lb::read_cache(buf);
  EXPECT_TRUE(back == ds);
  EXPECT_EQ(std::memcmp(back.features().data(), ds.features().data(),
                        sizeof(double) * static_cast<std::size_t>(ds.features().size())),
            0);
  EXPECT_EQ(back.shape(), ds.shape());
  EXPECT_EQ(back.class_count(), 5);
}

TEST(Cache, Errors) {
  std::stringstream junk("NOTIT and more bytes here");
  EXPECT_EQ(parse_kind([&] { lb::read_cache(junk); }), lb::ParseErrorKind::kBadMagic);
  std::stringstream empty;
  EXPECT_EQ(parse_kind([&] { lb::read_cache(empty); }), lb::ParseErrorKind::kTruncated);
  lb::RandomSource rng(2);
  std::stringstream buf;
  lb::write_cache(buf, random_images(rng, 3, {1, 2, 2}, 2));
  std::string bytes = buf.str();
  bytes.resize(bytes.size() - 3);
  std::stringstream cut(bytes);
  EXPECT_EQ(parse_kind([&] { lb::read_cache(cut); }), lb::ParseErrorKind::kTruncated);
}

TEST(Center, TwoPointMean) {
  lb::Matrix x(2, 1);
  x << 0.2, 0.4;
  const auto train = lb::LabeledDataset::from_vectors(x, {0, 1}, 2);
  const lb::CenteredData c = lb::preprocess_center(train);
  ASSERT_EQ(c.channel_means.size(), 1u);
  EXPECT_NEAR(c.channel_means[0], 0.3, 1e-15);
  EXPECT_NEAR(c.train.features()(0, 0), -0.1, 1e-15);
  EXPECT_NEAR(c.train.features()(1, 0), 0.1, 1e-15);
}

TEST(Center, UsesTrainMeansForOtherSetsPerChannel) {
  lb::RandomSource rng(3);
  const lb::ImageShape shape{3, 4, 4};
  const auto train = random_images(rng, 20, shape, 4);
  lb::LabeledDataset test = random_images(rng, 6, shape, 4);
  const std::vector<lb::LabeledDataset> others = {test};
  const lb::CenteredData c = lb::preprocess_center(train, others);
  ASSERT_EQ(c.channel_means.size(), 3u);
  for (int ch = 0; ch < 3; ++ch) {
    const auto block = train.features().middleCols(ch * 16, 16);
    const double mean = block.mean();
    EXPECT_NEAR(c.channel_means[static_cast<std::size_t>(ch)], mean, 1e-14);
    EXPECT_NEAR(c.train.features().middleCols(ch * 16, 16).mean(), 0.0, 1e-10);
    const lb::Matrix expected = test.features().middleCols(ch * 16, 16).array() - mean;
    EXPECT_LE((c.others[0].features().middleCols(ch * 16, 16) - expected).cwiseAbs().maxCoeff(),
              1e-15);
  }
  // No variance rescaling: centered spread equals the raw spread.
  const lb::Matrix diff = train.features().row(0) - train.features().row(1);
  EXPECT_LE((c.train.features().row(0) - c.train.features().row(1) - diff).cwiseAbs().maxCoeff(),
            1e-15);
}

TEST(Center, IdempotentOnTrain) {
  lb::RandomSource rng(4);
  const auto train = random_images(rng, 30, {2, 3, 3}, 3);
  const auto once = lb::preprocess_center(train).train;
  const auto twice = lb::preprocess_center(once);
  EXPECT_LE((twice.train.features() - once.features()).cwiseAbs().maxCoeff(), 1e-12);
  for (double m : twice.channel_means) EXPECT_NEAR(m, 0.0, 1e-12);
}

TEST(Center, ShapeMismatch) {
  lb::RandomSource rng(5);
  const auto train = random_images(rng, 4, {1, 2, 2}, 2);
  const std::vector<lb::LabeledDataset> others = {random_images(rng, 4, {4, 1, 1}, 2)};
  EXPECT_THROW(lb::preprocess_center(train, others), lb::ShapeError);
}

TEST(Pad, PlacementAndBorder) {
  lb::Matrix x = lb::Matrix::Zero(2, 784);
  x(1, 0) = 1.0;
  x(1, 27 * 28 + 27) = -0.5;
  const lb::LabeledDataset ds(x, {0, 1}, {1, 28, 28}, 2);
  const lb::LabeledDataset padded = lb::pad_mnist_to_32(ds);
  EXPECT_EQ(padded.dim(), 1024);
  EXPECT_EQ(padded.shape(), (lb::ImageShape{1, 32, 32}));
  EXPECT_TRUE((padded.features().row(0).array() == 0.0).all());
  EXPECT_EQ(padded.features()(1, 2 * 32 + 2), 1.0);
  EXPECT_EQ(padded.features()(1, 29 * 32 + 29), -0.5);
  EXPECT_EQ(padded.features().row(1).cwiseAbs().sum(), 1.5);
  EXPECT_EQ(padded.labels(), ds.labels());
  EXPECT_THROW(lb::pad_mnist_to_32(padded), lb::ShapeError);
}

TEST(Subsample, DeterministicNestedAndUniqueIndices) {
  const auto a = lb::subsample_indices(1000, 100, 42);
  const auto b = lb::subsample_indices(1000, 100, 42);
  const auto small = lb::subsample_indices(1000, 10, 42);
  EXPECT_EQ(a, b);
  EXPECT_TRUE(std::equal(small.begin(), small.end(), a.begin()));
  const std::set<std::size_t> unique(a.begin(), a.end());
  EXPECT_EQ(unique.size(), 100u);
  EXPECT_LT(*unique.rbegin(), 1000u);
  EXPECT_NE(lb::subsample_indices(1000, 100, 43), a);
}

TEST(Subsample, FullSizeIsPermutation) {
  auto idx = lb::subsample_indices(50, 50, 7);
  std::sort(idx.begin(), idx.end());
  for (std::size_t i = 0; i < idx.size(); ++i) EXPECT_EQ(idx[i], i);
}

TEST(Subsample, RowsFollowIndices) {
  lb::RandomSource rng(8);
  const auto ds = random_images(rng, 40, {1, 2, 3}, 4);
  const auto sub = lb::subsample(ds, 12, 99);
  const auto idx = lb::subsample_indices(40, 12, 99);
  for (std::size_t i = 0; i < idx.size(); ++i) {
    EXPECT_EQ(row_of(sub, static_cast<Eigen::Index>(i)),
              row_of(ds, static_cast<Eigen::Index>(idx[i])));
    EXPECT_EQ(sub.labels()[i], ds.labels()[idx[i]]);
  }
  EXPECT_EQ(sub.shape(), ds.shape());
  EXPECT_THROW(lb::subsample(ds, 0, 1), lb::ConfigError);
  EXPECT_THROW(lb::subsample(ds, 41, 1), lb::ConfigError);
}

TEST(Subsample, RoughlyUniform) {
  std::vector<int> hits(20, 0);
  for (std::uint64_t seed = 0; seed < 2000; ++seed) {
    for (std::size_t i : lb::subsample_indices(20, 5, seed)) ++hits[i];
  }
  // Each index expected 500 times; binomial sd ~19.4.
  for (int h : hits) EXPECT_NEAR(h, 500, 100);
}

TEST(Augment, Transforms) {
  const lb::ImageShape shape{1, 1, 2};
  const std::vector<double> img = {1.0, 2.0};
  EXPECT_EQ(lb::flip_horizontal(img, shape), (std::vector<double>{2.0, 1.0}));
  const lb::ImageShape sq{2, 3, 3};
  std::vector<double> x(18);
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = static_cast<double>(i + 1);
  EXPECT_EQ(lb::crop_at(x, sq, 4, 4, 4), x);
  // Offset (3, 4): window shifted up one row, first row zero.
  const auto up = lb::crop_at(x, sq, 4, 3, 4);
  EXPECT_EQ(up[0], 0.0);
  EXPECT_EQ(up[3], 1.0);
  EXPECT_EQ(up[9], 0.0);
  EXPECT_EQ(up[12], 10.0);
  const auto erased = lb::erase_patch(x, sq, 1, 1, 2, 2);
  for (int c = 0; c < 2; ++c) {
    for (int r = 0; r < 3; ++r) {
      for (int col = 0; col < 3; ++col) {
        const std::size_t i = static_cast<std::size_t>(c * 9 + r * 3 + col);
        const bool inside = r >= 1 && col >= 1;
        EXPECT_EQ(erased[i], inside ? 0.0 : x[i]);
      }
    }
  }
}

TEST(Augment, SwitchesOffIsIdentity) {
  lb::RandomSource rng(9);
  const lb::ImageShape shape{3, 8, 8};
  std::vector<double> x(192);
  for (auto& v : x) v = rng.normal();
  const lb::AugmentConfig off;
  EXPECT_FALSE(off.any());
  EXPECT_EQ(lb::augment(x, shape, off, rng), x);
}

TEST(Augment, OutputsAreCropWindowsOrFlips) {
  const lb::ImageShape shape{1, 6, 6};
  std::vector<double> x(36);
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = static_cast<double>(i + 1);
  lb::AugmentConfig cfg;
  cfg.random_crop = true;
  cfg.horizontal_flip = true;
  cfg.crop_padding = 2;
  cfg.validate(shape);
  std::set<std::vector<double>> windows;
  for (int oy = 0; oy <= 4; ++oy) {
    for (int ox = 0; ox <= 4; ++ox) {
      const auto w = lb::crop_at(x, shape, 2, oy, ox);
      windows.insert(w);
      windows.insert(lb::flip_horizontal(w, shape));
    }
  }
  lb::RandomSource rng(10);
  std::set<std::vector<double>> produced;
  for (int t = 0; t < 500; ++t) {
    const auto y = lb::augment(x, shape, cfg, rng);
    ASSERT_EQ(y.size(), x.size());
    EXPECT_TRUE(windows.count(y) == 1);
    produced.insert(y);
  }
  EXPECT_GT(produced.size(), 25u);  // both offsets and flips vary
  EXPECT_TRUE(produced.count(x) == 1);
}

TEST(Augment, EraseZeroesOneRectangleInRange) {
  const lb::ImageShape shape{2, 10, 10};
  std::vector<double> x(200, 1.0);
  lb::AugmentConfig cfg;
  cfg.random_erase = true;
  cfg.erase_min = 2;
  cfg.erase_max = 4;
  cfg.validate(shape);
  lb::RandomSource rng(11);
  for (int t = 0; t < 100; ++t) {
    const auto y = lb::augment(x, shape, cfg, rng);
    const long zeros = std::count(y.begin(), y.end(), 0.0);
    // Same rectangle on both channels; side lengths in [2, 4].
    EXPECT_EQ(zeros % 2, 0);
    EXPECT_GE(zeros / 2, 4);
    EXPECT_LE(zeros / 2, 16);
    EXPECT_TRUE(std::equal(y.begin(), y.begin() + 100, y.begin() + 100));
  }
}

TEST(Augment, ConfigValidation) {
  const lb::ImageShape shape{1, 4, 4};
  lb::AugmentConfig cfg;
  cfg.crop_padding = -1;
  EXPECT_THROW(cfg.validate(shape), lb::ConfigError);
  cfg = {};
  cfg.random_erase = true;
  cfg.erase_min = 3;
  cfg.erase_max = 5;
  EXPECT_THROW(cfg.validate(shape), lb::ConfigError);
  cfg.erase_min = 0;
  cfg.erase_max = 2;
  EXPECT_THROW(cfg.validate(shape), lb::ConfigError);
  cfg.erase_min = 1;
  EXPECT_NO_THROW(cfg.validate(shape));
}
