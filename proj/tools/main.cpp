#include <iostream>
#include <string>
#include <vector>

#include "optswitch/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv, argv + argc);
  return optswitch::run_cli(args, std::cout, std::cerr);
}
