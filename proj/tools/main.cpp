#include <iostream>

#include "app/commands.hpp"

int main(int argc, char** argv) { return helpsense::app::run_cli(argc, argv, std::cin, std::cout, std::cerr); }
