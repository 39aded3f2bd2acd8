#include <iostream>
#include <string>
#include <vector>

#include "partisan/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv, argv + argc);
  return partisan::cli::run(args, std::cout, std::cerr);
}
