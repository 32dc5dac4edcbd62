#include <iostream>
#include <string>
#include <vector>

#include "mcxai/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv, argv + argc);
  return mcxai::run_cli(args, std::cout, std::cerr);
}
