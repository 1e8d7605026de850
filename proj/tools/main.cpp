#include <iostream>

#include "cli.hpp"

int main(int argc, char** argv) { return rcm4::tools::cli_main(argc, argv, std::cout, std::cerr); }
