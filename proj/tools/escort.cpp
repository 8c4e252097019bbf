#include "escort/cli.hpp"

int main(int argc, char** argv) { return escort::cli_main(argc, argv); }
