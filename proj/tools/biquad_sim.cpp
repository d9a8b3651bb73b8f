#include "biquad/cli.hpp"

#include <iostream>

int main(int argc, char** argv) { return biquad::cli_main(argc, argv, std::cout, std::cerr); }
