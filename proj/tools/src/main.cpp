#include <iostream>
#include <string>
#include <vector>

#include "lipbench_cli/cli.hpp"

int main(int argc, char** argv) {
  lipbench::cli::tune_allocator();
  std::vector<std::string> args(argv + 1, argv + argc);
  return lipbench::cli::run(args, std::cout, std::cerr);
}
