#include "qhyp/cli/commands.hpp"

#include <iostream>

int main(int argc, char** argv) { return qhyp::cli::run_cli(argc, argv, std::cout, std::cerr); }
