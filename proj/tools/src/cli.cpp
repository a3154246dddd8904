#include "lipbench_cli/cli.hpp"

#include <array>
#include <ostream>
#include <stdexcept>
#include <utility>

#if defined(__GLIBC__)
#include <malloc.h>
#endif

#include <CLI11.hpp>

#include "commands.hpp"
#include "common.hpp"
#include "lipbench/errors.hpp"

namespace lipbench::cli {
namespace {

using Command = int (*)(const Args&, std::ostream&);

constexpr std::array<std::pair<const char*, const char*>, 7> kHelp = {{
    {"nfr", "No-Free-Robustness: hypercube family, zero-feature attack"},
    {"cover", "1-NN certified robust accuracy on a margin distribution"},
    {"train", "train a Lipschitz MLP, report accuracy and CRA"},
    {"scale", "data or compute scaling of CRA"},
    {"pca", "variance explained by component ranges, projected datasets"},
    {"smooth", "randomized-smoothing predictions and radii"},
    {"nndist", "median nearest-neighbour distance and intrinsic dimension"},
}};

Command lookup(const std::string& name) {
  if (name == "nfr") return cmd_nfr;
  if (name == "cover") return cmd_cover;
  if (name == "train") return cmd_train;
  if (name == "scale") return cmd_scale;
  if (name == "pca") return cmd_pca;
  if (name == "smooth") return cmd_smooth;
  if (name == "nndist") return cmd_nndist;
  return nullptr;
}

void usage(std::ostream& os) {
  os << "usage: lipbench <command> [--config FILE] [flags]\n\ncommands:\n";
  for (const auto& [name, text] : kHelp) os << "  " << name << std::string(8 - std::string(name).size(), ' ') << text << "\n";
  os << "\nRun `lipbench <command> --help` for the flags of one command.\n";
}

}  // namespace

void tune_allocator() {
#if defined(__GLIBC__)
  mallopt(M_MMAP_THRESHOLD, 512 * 1024 * 1024);
  mallopt(M_TRIM_THRESHOLD, 1024 * 1024 * 1024);
#endif
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  if (args.empty() || args[0] == "--help" || args[0] == "-h") {
    usage(args.empty() ? err : out);
    return args.empty() ? kExitUsage : kExitOk;
  }
  const Command command = lookup(args[0]);
  if (!command) {
    err << "lipbench: unknown command '" << args[0] << "'\n";
    usage(err);
    return kExitUsage;
  }
  const Args rest(args.begin() + 1, args.end());
  try {
    return command(rest, out);
  } catch (const HelpRequested& help) {
    out << help.text;
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "lipbench " << args[0] << ": " << e.what() << "\n"
        << "usage: lipbench " << args[0] << " [--config FILE] [flags]; see `lipbench " << args[0]
        << " --help`\n";
    return kExitUsage;
  } catch (const DivergenceError& e) {
    err << "lipbench " << args[0] << ": " << e.what() << "\n";
    return kExitNumeric;
  } catch (const InputError& e) {
    err << "lipbench " << args[0] << ": " << e.what() << "\n";
    return kExitUsage;
  } catch (const ParseError& e) {
    err << "lipbench " << args[0] << ": " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::invalid_argument& e) {  // ConfigError, ShapeError
    err << "lipbench " << args[0] << ": " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::domain_error& e) {
    err << "lipbench " << args[0] << ": " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "lipbench " << args[0] << ": unexpected error: " << e.what() << "\n";
    return kExitFailure;
  }
}

}  // namespace lipbench::cli
