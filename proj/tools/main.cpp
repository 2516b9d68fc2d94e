#include <iostream>

#include "commands.hpp"

int main(int argc, char** argv) {
    return l2c::cli::run(argc, argv, std::cout, std::cerr);
}
