#include "taac/cli_commands.hpp"

int main(int argc, char** argv) { return taac::cli::run(argc, argv); }
