#include <iostream>

#include "zipem/cli.hpp"

int main(int argc, char** argv) {
  return zipem::cli(std::vector<std::string>(argv, argv + argc), std::cout, std::cerr);
}
