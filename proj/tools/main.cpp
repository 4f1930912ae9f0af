#include <iostream>
#include <string>
#include <vector>

#include "pcert/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return pcert::cli_dispatch(args, std::cout, std::cerr);
}
