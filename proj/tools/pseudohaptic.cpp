#include "pseudohaptic/cli.hpp"

#include <iostream>

int main(int argc, char** argv)
{
    return pseudohaptic::run_cli(argc, argv, std::cout, std::cerr);
}
