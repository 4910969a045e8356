#include <iostream>

#include "mmpa/cli.hpp"

int main(int argc, char** argv) { return mmpa::io::run_cli(argc, argv, std::cout, std::cerr); }
