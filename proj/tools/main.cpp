#include "cli.hpp"
int main(int argc, char** argv) { return reviewkit::cli::cli_main(argc, argv); }
