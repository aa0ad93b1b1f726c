#include <iostream>

#include "thinkmt/cli/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return thinkmt::cli::run(args, std::cout, std::cerr);
}
