#include <iostream>
#include <string>
#include <vector>

#include "magwaist/cli.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return magwaist::run_cli(args, std::cout, std::cerr);
}
