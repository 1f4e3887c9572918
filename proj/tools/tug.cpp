#include "tug/cli.hpp"

int main(int argc, char** argv) { return tug::cli::run(argc, argv); }
