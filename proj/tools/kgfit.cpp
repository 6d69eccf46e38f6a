#include <iostream>
#include <string>
#include <vector>

#include "kgfit/cli.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return kgfit::cli::run(args, std::cout, std::cerr);
}
