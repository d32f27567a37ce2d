#include "lscs/cli.hpp"

#include <iostream>

int main(int argc, char** argv) { return lscs::cli::run(argc, argv, std::cout, std::cerr); }
