#include <iostream>

#include "diffgeo_lab/cli.hpp"

int main(int argc, char **argv) {
  const std::vector<std::string> args(argv + 1, argv + argc);
  return diffgeo::lab::run(args, std::cout, std::cerr);
}
