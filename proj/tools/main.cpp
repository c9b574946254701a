#include "cli.hpp"

int main(int argc, char** argv) { return jumpsteer::cli::parse_and_dispatch(argc, argv); }
