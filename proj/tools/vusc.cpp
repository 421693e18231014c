#include <iostream>

#include "vusc/cli.hpp"

int main(int argc, char** argv) { return vusc::cli::run(argc, argv, std::cout, std::cerr); }
