#include <iostream>

#include "coeval/cli.hpp"

int main(int argc, char** argv) {
  return coeval::cli::run(std::vector<std::string>(argv, argv + argc), std::cout, std::cerr);
}
