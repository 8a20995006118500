#include "robmv/cli.hpp"

#include <iostream>

int main(int argc, char** argv) {
    return robmv::cli::run(argc, argv, std::cout, std::cerr);
}
