#include <iostream>

#include "tunetree_cli/cli.hpp"

int main(int argc, char** argv)
{
    return tunetree::cli::run_cli(argc, argv, std::cout, std::cerr);
}
