#include <iostream>

#include "geomc/cli.hpp"

int main(int argc, char** argv) { return geomc::run_main(argc, argv, std::cout, std::cerr); }
