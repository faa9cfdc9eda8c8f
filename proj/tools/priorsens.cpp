#include "priorsens/cli.hpp"

#include <iostream>

int main(int argc, char** argv) { return priorsens::cli::run(argc, argv, std::cout, std::cerr); }
