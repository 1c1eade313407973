#include "eastwalk/cli.hpp"

int main(int argc, char** argv) { return eastwalk::cli::run_cli(argc, argv); }
