#include <iostream>

#include "qsk/harness.hpp"

int main(int argc, char** argv) { return qsk::cli::run_cli(argc, argv, std::cout, std::cerr); }
