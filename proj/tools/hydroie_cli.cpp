#include <iostream>

#include "hydroie/cli.hpp"

int main(int argc, char** argv) { return hydroie::run_cli(argc, argv, std::cout, std::cerr); }
