#include "endogeo/cli.hpp"

#include <iostream>

int main(int argc, char** argv) { return endogeo::cli::run(argc, argv, std::cout, std::cerr); }
