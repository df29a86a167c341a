#include <iostream>

#include "cli.hpp"

int main(int argc, char** argv) {
  return mavic::cli::run({argv + 1, argv + argc}, std::cerr);
}
