#include "t2iopt/cli.hpp"

int main(int argc, char** argv) { return t2iopt::run_cli(argc, argv); }
