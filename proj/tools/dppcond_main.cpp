#include "dppcond/runner.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return dppcond::run_cli(args);
}
