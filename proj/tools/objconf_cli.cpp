#include <iostream>
#include <string>
#include <vector>

#include "objconf/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return objconf::cli::dispatch(args, std::cout, std::cerr);
}
