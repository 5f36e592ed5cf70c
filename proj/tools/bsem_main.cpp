#include "bsem/cli/commands.hpp"

int main(int argc, char** argv) { return bsem::cli::run(argc, argv); }
