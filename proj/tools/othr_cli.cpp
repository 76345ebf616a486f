#include "cli.hpp"

int main(int argc, char** argv) { return othr::cli::run_cli(argc, argv); }
