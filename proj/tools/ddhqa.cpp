#include <iostream>
#include <string>
#include <vector>

#include "ddhqa/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv, argv + argc);
  return ddhqa::cli::run(args, std::cout, std::cerr);
}
