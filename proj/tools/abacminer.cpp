#include <iostream>
#include <string>
#include <vector>

#include "abac/cli.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv, argv + argc);
    return abac::run_cli(args, std::cout, std::cerr);
}
