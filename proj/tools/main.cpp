#include <iostream>

#include "corridorflow/cli.hpp"

int main(int argc, char** argv) {
  return corridorflow::cli::run(argc, argv, std::cout, std::cerr);
}
