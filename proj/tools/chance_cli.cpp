#include "chance/cli.hpp"

int main(int argc, char** argv) { return chance::cli::run_cli(argc, argv); }
