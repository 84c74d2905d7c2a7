#include "vbcap/cli.hpp"

int main(int argc, char** argv) { return vbcap::run_cli(argc, argv); }
