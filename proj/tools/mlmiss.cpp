#include <mlmiss/cli.hpp>

int main(int argc, char** argv) { return mlmiss::run_cli(argc, argv); }
