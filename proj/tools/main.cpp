#include <iostream>

#include "antipure/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return antipure::cli_main(args, std::cout, std::cerr);
}
