#include "cli/commands.hpp"

int main(int argc, char** argv) { return rectify::cli::run(argc, argv); }
