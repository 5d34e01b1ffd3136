#include "mrtele/cli.hpp"

#include <iostream>

int main(int argc, char** argv) { return mrtele::cli::run_cli(argc, argv, std::cout, std::cerr); }
