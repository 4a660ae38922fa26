#include <iostream>

#include "grove/cli.h"

int main(int argc, char** argv) { return grove::cli_main(argc, argv, std::cout, std::cerr); }
