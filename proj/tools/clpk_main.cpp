#include "clpk/cli.hpp"

int main(int argc, char **argv) { return clpk::cli_main(argc, argv); }
