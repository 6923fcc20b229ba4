#include "disent/cli.hpp"

int main(int argc, char** argv) { return disent::cli_main(argc, argv); }
