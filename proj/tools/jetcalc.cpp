#include <iostream>

#include "jetcalc/cli.hpp"

int main(int argc, char** argv) { return jetcalc::run_cli(argc, argv, std::cout, std::cerr); }
