#include "dnamix/cli.hpp"

int main(int argc, char** argv) { return dnamix::cli::run_command(argc, argv); }
