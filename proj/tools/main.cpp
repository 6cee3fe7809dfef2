#include "cli.hpp"

#include <iostream>

int main(int argc, char** argv) { return attnorm::cli::run(argc, argv, std::cout, std::cerr); }
