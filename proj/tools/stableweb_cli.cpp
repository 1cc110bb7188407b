#include "stableweb/cli.hpp"

int main(int argc, char** argv) { return stableweb::cli::cli_main(argc, argv); }
