#include "thinlimit/cli.hpp"

int main(int argc, char** argv) { return thinlimit::run_cli(argc, argv); }
