#include "cli.hpp"

int main(int argc, char** argv) { return tass::cli::run(argc, argv); }
