#include "mirage/cli.hpp"

int main(int argc, char** argv) { return mirage::cli::run(argc, argv); }
