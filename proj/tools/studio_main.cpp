#include <iostream>

#include "artdream/studio/cli.hpp"

int main(int argc, char** argv) { return artdream::studio::run_cli(argc, argv, std::cout, std::cerr); }
