#include "evograd/cli.hpp"

int main(int argc, char** argv) { return evograd::run_cli(argc, argv); }
