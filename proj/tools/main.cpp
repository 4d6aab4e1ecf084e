#include <iostream>

#include "tubefit/cli.hpp"

int main(int argc, char** argv) {
    return tubefit::run_cli(argc, argv, std::cout, std::cerr);
}
