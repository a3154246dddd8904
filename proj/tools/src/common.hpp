#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "lipbench/datasets/dataset.hpp"
#include "lipbench/lipnet/network.hpp"
#include "lipbench/lipnet/train.hpp"

namespace lipbench::cli {

using Json = nlohmann::ordered_json;

/// Options every command accepts.
struct Common {
  std::string out;
  std::uint64_t seed = 0;
  int threads = 0;
  bool record_timing = false;
  std::string data_root;
};

void add_common(CLI::App& app, Common& common, const std::string& command);

/// Thrown by parse() for --help; carries the formatted help text.
struct HelpRequested {
  std::string text;
};

/// Parses args (program name excluded) into `app`.
void parse(CLI::App& app, const std::vector<std::string>& args);

/// Creates the output directory, applies --threads, writes config.echo.
std::filesystem::path prepare_output(const CLI::App& app, const Common& common);

/// Writes summary.json: command, config, results, environment, timing.
void write_summary(const std::filesystem::path& dir, const std::string& command,
                   const CLI::App& app, const Json& results, double wall_seconds);

void write_text(const std::filesystem::path& path, const std::string& text);

/// Model and optimiser flags shared by train/scale/pca.
struct ModelOptions {
  lipnet::MlpSpec mlp;
  lipnet::TrainConfig train;
  std::string layer = "aol";
  std::string activation = "maxmin";
  std::string init = "identity";
  std::string loss = "offset-ce";

  void add(CLI::App& app, bool with_epochs);
  /// Resolves the string options; input_dim and classes come from the data.
  void finish(const LabeledDataset& data);
  Json to_json() const;
};

struct ImageData {
  LabeledDataset train;
  LabeledDataset test;
};

/// "mnist": centered and zero-padded to 32x32. "cifar10": centered.
ImageData load_image_data(const std::string& name, const std::string& data_root);

std::string default_data_root();

}  // namespace lipbench::cli
