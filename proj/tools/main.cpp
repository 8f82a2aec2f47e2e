#include <iostream>
#include <string>
#include <vector>

#include "batchsym/cli/app.h"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return batchsym::cli::RunCli(args, std::cout, std::cerr);
}
