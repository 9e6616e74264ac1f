#include <twostrain/cli.hpp>

int main(int argc, char** argv) { return twostrain::run_cli(argc, argv); }
