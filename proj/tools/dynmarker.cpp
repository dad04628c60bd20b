#include <string>
#include <vector>

#include "dynmarker/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return dynmarker::run_cli(std::move(args));
}
