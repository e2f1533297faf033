#include "superhedge/cli.hpp"

int main(int argc, char** argv) { return superhedge::cli::main_entry(argc, argv); }
