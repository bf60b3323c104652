#include "panograph/cli.hpp"

int main(int argc, char** argv) { return panograph::cli::cli_dispatch(argc, argv); }
