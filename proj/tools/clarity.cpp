#include <iostream>
#include <string>
#include <vector>

#include "clarity/commands.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv, argv + argc);
  return clarity::run_cli(args, std::cout, std::cerr);
}
