#include "exlab/cli.hpp"

int main(int argc, char** argv) { return exlab::cli::run(argc, argv); }
