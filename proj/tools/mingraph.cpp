#include <iostream>

#include "mingraph/cli.hpp"

int main(int argc, char** argv) { return mingraph::cli_main(argc, argv, std::cout, std::cerr); }
