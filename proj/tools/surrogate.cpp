#include "surrogate/cli.hpp"

int main(int argc, char** argv) { return surrogate::cli::run(argc, argv); }
