#include <iostream>

#include "calitr/cli.hpp"

int main(int argc, char** argv) { return calitr::run_cli(argc, argv, std::cout, std::cerr); }
