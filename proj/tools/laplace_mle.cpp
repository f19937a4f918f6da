#include <iostream>

#include "laplace/cli.hpp"

int main(int argc, char** argv) { return laplace::run_cli(argc, argv, std::cout, std::cerr); }
