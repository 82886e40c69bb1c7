#include "optbench/cli.hpp"

int main(int argc, char** argv) { return optbench::cli::main(argc, argv); }
