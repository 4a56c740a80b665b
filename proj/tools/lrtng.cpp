#include <iostream>
#include <string>
#include <vector>

#include "lrtng/cli.hpp"

int main(int argc, char** argv) {
  const std::vector<std::string> args(argv + 1, argv + argc);
  return lrtng::cli::main(args, std::cout, std::cerr);
}
