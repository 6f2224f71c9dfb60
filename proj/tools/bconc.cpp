#include "bconc/cli.hpp"

int main(int argc, char** argv) { return bconc::cli::main(argc, argv); }
