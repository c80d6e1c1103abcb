#include <iostream>

#include "rql/cli.hpp"

int main(int argc, char** argv) {
    return rql::run_cli(argc, argv, std::cout, std::cerr);
}
