#include <iostream>
#include <string>
#include <vector>

#include "cli/run.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return dem::cli::run_cli(args, std::cout, std::cerr, dem::cli::process_environment());
}
