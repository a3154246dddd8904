#include "common.hpp"

#include <sys/utsname.h>

#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <sstream>
#include <thread>

#include <Eigen/Core>

#include "lipbench/datasets/loaders.hpp"
#include "lipbench/datasets/preprocess.hpp"
#include "lipbench/errors.hpp"

#ifndef LIPBENCH_DEFAULT_DATA
#define LIPBENCH_DEFAULT_DATA "data"
#endif
#ifndef LIPBENCH_BUILD_TYPE
#define LIPBENCH_BUILD_TYPE "unknown"
#endif

namespace lipbench::cli {

std::string default_data_root() {
  if (const char* env = std::getenv("LIPBENCH_DATA"); env && *env) return env;
  return LIPBENCH_DEFAULT_DATA;
}

void add_common(CLI::App& app, Common& common, const std::string& command) {
  app.set_config("--config", "", "Flat key=value file; command-line flags override it");
  app.allow_config_extras(false);
  common.out = "out/" + command;
  app.add_option("--out", common.out, "Output directory")->capture_default_str();
  app.add_option("--seed", common.seed, "Root seed")->capture_default_str();
  app.add_option("--threads", common.threads, "Worker cap (0 = library default)")
      ->capture_default_str()
      ->check(CLI::NonNegativeNumber);
  app.add_flag("--record-timing", common.record_timing,
               "Write measured wall_seconds into rows.csv (breaks byte-identical reruns)");
  common.data_root = default_data_root();
  app.add_option("--data-root", common.data_root, "Holds mnist/ and cifar10/ (env LIPBENCH_DATA)")
      ->capture_default_str();
}

void parse(CLI::App& app, const std::vector<std::string>& args) {
  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    throw HelpRequested{app.help()};
  }
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write " + path.string());
  out << text;
  if (!out) throw InputError("write failed: " + path.string());
}

std::filesystem::path prepare_output(const CLI::App& app, const Common& common) {
  if (common.threads > 0) Eigen::setNbThreads(common.threads);
  const std::filesystem::path dir(common.out);
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw InputError("cannot create output directory " + dir.string() + ": " + ec.message());
  write_text(dir / "config.echo", app.config_to_str(true, false));
  return dir;
}

namespace {

Json config_json(const CLI::App& app) {
  Json cfg = Json::object();
  std::istringstream lines(app.config_to_str(true, false));
  std::string line;
  while (std::getline(lines, line)) {
    const auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    std::string value = line.substr(eq + 1);
    if (value.size() >= 2 && value.front() == '"' && value.back() == '"') {
      value = value.substr(1, value.size() - 2);
    }
    cfg[line.substr(0, eq)] = value;
  }
  return cfg;
}

Json environment() {
  Json env;
  utsname u{};
  if (uname(&u) == 0) {
    env["os"] = std::string(u.sysname) + " " + u.release;
    env["machine"] = u.machine;
  }
  env["compiler"] = __VERSION__;
  env["cxx_standard"] = static_cast<long>(__cplusplus);
  env["build_type"] = LIPBENCH_BUILD_TYPE;
  env["eigen"] = std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) +
                 "." + std::to_string(EIGEN_MINOR_VERSION);
  env["eigen_simd"] = Eigen::SimdInstructionSetsInUse();
  env["hardware_threads"] = std::thread::hardware_concurrency();
  env["eigen_threads"] = Eigen::nbThreads();
  return env;
}

std::string utc_now() {
  const std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace

void write_summary(const std::filesystem::path& dir, const std::string& command,
                   const CLI::App& app, const Json& results, double wall_seconds) {
  Json doc;
  doc["command"] = command;
  doc["config"] = config_json(app);
  doc["results"] = results;
  doc["environment"] = environment();
  doc["finished_utc"] = utc_now();
  doc["wall_seconds"] = wall_seconds;
  write_text(dir / "summary.json", doc.dump(2) + "\n");
}

void ModelOptions::add(CLI::App& app, bool with_epochs) {
  if (with_epochs) app.add_option("--epochs", train.epochs, "Training epochs")->capture_default_str();
  app.add_option("--lr", train.peak_lr, "Peak learning rate of the one-cycle schedule")->capture_default_str();
  app.add_option("--batch", train.batch_size, "Batch size")->capture_default_str();
  app.add_option("--momentum", train.momentum, "Nesterov momentum")->capture_default_str();
  app.add_option("--width", mlp.width, "Hidden width")->capture_default_str();
  app.add_option("--depth", mlp.depth, "Number of dense layers")->capture_default_str();
  app.add_option("--layer", layer, "aol | cpl | standard")->capture_default_str();
  app.add_option("--activation", activation, "maxmin | relu | none")->capture_default_str();
  app.add_option("--init", init, "identity | orthogonal | uniform")->capture_default_str();
  app.add_option("--loss", loss, "temperature-ce | offset-ce | selfnorm-ce")->capture_default_str();
  app.add_option("--offset", train.loss.offset, "Loss offset")->capture_default_str();
  app.add_option("--temperature", train.loss.temperature, "Loss temperature")->capture_default_str();
  app.add_option("--tradeoff", train.loss.tradeoff, "SelfNormCE trade-off t")->capture_default_str();
  app.add_option("--epsilon", train.epsilon, "Certification radius (L2)")->capture_default_str();
  app.add_flag("--crop,!--no-crop", train.augment.random_crop, "Random crop augmentation");
  app.add_option("--crop-padding", train.augment.crop_padding, "Crop padding")->capture_default_str();
  app.add_flag("--flip,!--no-flip", train.augment.horizontal_flip, "Random horizontal flips");
  app.add_flag("--erase,!--no-erase", train.augment.random_erase, "Random patch erasing");
  app.add_option("--noise", train.input_noise, "Gaussian input-noise std during training")
      ->capture_default_str();
}

void ModelOptions::finish(const LabeledDataset& data) {
  mlp.input_dim = static_cast<int>(data.dim());
  mlp.classes = data.class_count();
  mlp.kind = lipnet::parse_layer_kind(layer);
  if (activation == "maxmin") {
    mlp.activation = lipnet::Activation::kMaxMin;
  } else if (activation == "relu") {
    mlp.activation = lipnet::Activation::kRelu;
  } else if (activation == "none") {
    mlp.activation = lipnet::Activation::kNone;
  } else {
    throw ConfigError("unknown activation '" + activation + "'");
  }
  if (init == "identity") {
    mlp.init = lipnet::InitScheme::kIdentity;
  } else if (init == "orthogonal") {
    mlp.init = lipnet::InitScheme::kOrthogonal;
  } else if (init == "uniform") {
    mlp.init = lipnet::InitScheme::kUniform;
  } else {
    throw ConfigError("unknown init '" + init + "'");
  }
  train.loss.kind = lipnet::parse_loss_kind(loss);
  train.validate();
  if (train.augment.any()) train.augment.validate(data.shape());
}

Json ModelOptions::to_json() const {
  Json j;
  j["layer"] = layer;
  j["activation"] = activation;
  j["width"] = mlp.width;
  j["depth"] = mlp.depth;
  j["input_dim"] = mlp.input_dim;
  j["classes"] = mlp.classes;
  j["loss"] = loss;
  j["peak_lr"] = train.peak_lr;
  j["epsilon"] = train.epsilon;
  return j;
}

ImageData load_image_data(const std::string& name, const std::string& data_root) {
  const std::filesystem::path root(data_root);
  if (name == "mnist") {
    TrainTestSplit raw = load_mnist_dir(root / "mnist");
    const std::vector<LabeledDataset> others{raw.test};
    CenteredData c = preprocess_center(raw.train, others);
    return {pad_mnist_to_32(c.train), pad_mnist_to_32(c.others[0])};
  }
  if (name == "cifar10") {
    TrainTestSplit raw = load_cifar10_dir(root / "cifar10");
    const std::vector<LabeledDataset> others{raw.test};
    CenteredData c = preprocess_center(raw.train, others);
    return {std::move(c.train), std::move(c.others[0])};
  }
  throw ConfigError("unknown dataset '" + name + "' (mnist, cifar10)");
}

}  // namespace lipbench::cli
