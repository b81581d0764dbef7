#include <iostream>

#include "amata/cli.hpp"

int main(int argc, char** argv) { return amata::run_cli(argc, argv, std::cout, std::cerr); }
