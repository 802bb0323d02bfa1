#include <iostream>

#include "gdiss/cli.hpp"

int main(int argc, char** argv) {
  return gdiss::run_cli(argc, argv, std::cout, std::cerr);
}
