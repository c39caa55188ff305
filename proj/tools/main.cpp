#include "irnav/cli.hpp"

int main(int argc, char** argv) { return irnav::run_cli(argc, argv); }
