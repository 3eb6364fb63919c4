#include <iostream>

#include "emsa/cli.hpp"

int main(int argc, char** argv) {
  return emsa::cli::run(argc, argv, std::cout, std::cerr);
}
