#include <iostream>

#include "mfhawkes/cli.hpp"

int main(int argc, char** argv) {
    return mfhawkes::run_cli(argc, argv, std::cout, std::cerr);
}
