#include "primer/fixtures.hpp"

#include <exception>
#include <iostream>

int main(int argc, char** argv)
{
    if (argc != 2) {
        std::cerr << "usage: make_fixtures DIR\n";
        return 1;
    }
    try {
        primer::fixtures::write_fixture_set(argv[1]);
    } catch (const std::exception& e) {
        std::cerr << "make_fixtures: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
