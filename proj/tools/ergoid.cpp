#include "ergoid/cli.hpp"

int main(int argc, char** argv) { return ergoid::cli_main(argc, argv); }
