#include "patchsr/cli.hpp"

#include <iostream>

int main(int argc, char** argv) {
  return patchsr::cli::run({argv, argv + argc}, std::cout, std::cerr);
}
