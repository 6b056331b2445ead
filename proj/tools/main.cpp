#include <iostream>

#include "uavdt/cli.hpp"

int main(int argc, char** argv) { return uavdt::run_cli(argc, argv, std::cout, std::cerr); }
