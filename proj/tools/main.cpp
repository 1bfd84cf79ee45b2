#include "mqbench/cli/cli.hpp"

int main(int argc, char** argv) { return mqbench::cli::cli_main(argc, argv); }
