#include <iostream>

#include "subguard/cli.hpp"

int main(int argc, char** argv) { return subguard::run_cli(argc, argv, std::cout, std::cerr); }
