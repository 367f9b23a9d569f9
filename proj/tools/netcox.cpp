#include "netcox/cli.hpp"

int main(int argc, char** argv) { return netcox::cli::run(argc, argv); }
