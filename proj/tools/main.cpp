#include <iostream>

#include "nugget_forge/cli.h"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return nf::run_cli(args, std::cout, std::cerr);
}
