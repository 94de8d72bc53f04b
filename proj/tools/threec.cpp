#include "threec/cli.hpp"

int main(int argc, char** argv) { return threec::cli_dispatch(argc, argv); }
