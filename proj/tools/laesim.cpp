#include "laesim/cli.hpp"

int main(int argc, char** argv) { return laesim::cli::run_cli(argc, argv); }
