#include "ultrasr/cli.hpp"

int main(int argc, char** argv) { return ultrasr::run_cli(argc, argv); }
