#include "swdrso/cli.hpp"

int main(int argc, char** argv) { return swdrso::cli::run(argc, argv); }
