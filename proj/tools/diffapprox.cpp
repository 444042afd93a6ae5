#include <iostream>

#include "diffapprox/cli/commands.hpp"

int main(int argc, char** argv) { return diffapprox::cli::run_cli(argc, argv, std::cout, std::cerr); }
