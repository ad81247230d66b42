#include <iostream>
#include <string>
#include <vector>

#include "tpmr/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return tpmr::run_cli(args, std::cout, std::cerr);
}
