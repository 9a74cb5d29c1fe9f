#include <iostream>

#include "svo/cli.hpp"

int main(int argc, char** argv) { return svo::dispatch(argc, argv, std::cout, std::cerr); }
