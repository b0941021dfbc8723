#include "storyline/cli/commands.hpp"

int main(int argc, char** argv) { return storyline::cli::RunCli(argc, argv); }
