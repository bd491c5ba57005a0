#include <iostream>

#include "steinpearson/cli.hpp"

int main(int argc, char** argv) {
    return steinpearson::cli::main_entry(argc, argv, std::cout, std::cerr);
}
