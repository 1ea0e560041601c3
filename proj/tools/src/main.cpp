#include <iostream>

#include "idse_cli/cli.hpp"

int main(int argc, char** argv) {
  return idse::cli::run(std::vector<std::string>(argv + (argc > 0 ? 1 : 0), argv + argc), std::cout, std::cerr);
}
