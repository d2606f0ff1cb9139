#include "commands.hpp"

int main(int argc, char** argv) { return paa::cli::run_cli(argc, argv); }
