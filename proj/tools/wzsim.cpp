#include "wz/cli.hpp"

int main(int argc, char** argv) { return wz::run_cli(argc, argv); }
