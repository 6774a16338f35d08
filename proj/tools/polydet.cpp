#include <string>
#include <vector>

#include "polydet/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return polydet::cli::run_command(args);
}
