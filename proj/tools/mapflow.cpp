#include <iostream>

#include "mapflow/cli.hpp"

int main(int argc, char** argv) { return mapflow::cli::run(argc, argv, std::cout, std::cerr); }
