#include <iostream>
#include <string>
#include <vector>

#include "mitoforge/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return mitoforge::cli::run(args, std::cout, std::cerr);
}
