#include "phi4lsi/cli.hpp"

int main(int argc, char** argv) { return phi4::cli_main(argc, argv); }
