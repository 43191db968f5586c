#include "ials/cli/app.hpp"

int main(int argc, char** argv) { return ials::cli::run_cli(argc, argv); }
