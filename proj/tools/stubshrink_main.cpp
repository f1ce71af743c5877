#include <string>
#include <vector>

#include "stubshrink/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return stubshrink::cli::run(args);
}
