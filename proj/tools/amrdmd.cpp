#include <iostream>

#include "amrdmd/pipeline.hpp"

int main(int argc, char** argv) { return amrdmd::pipeline::run_cli(argc, argv, std::cout, std::cerr); }
