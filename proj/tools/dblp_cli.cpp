#include <iostream>
#include <string>
#include <vector>

#include "dblp/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv, argv + argc);
  return dblp::run_cli(args, std::cout, std::cerr);
}
