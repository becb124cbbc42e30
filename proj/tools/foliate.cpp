#include "foliate/cli.hpp"

int main(int argc, char** argv) { return foliate::run_cli(argc, argv); }
