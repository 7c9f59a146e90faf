#include <iostream>

#include "goldsci/cli.hpp"

int main(int argc, char** argv) { return goldsci::cli::run_cli(argc, argv, std::cout, std::cerr); }
