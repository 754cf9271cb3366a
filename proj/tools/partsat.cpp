#include "partsat/cli.hpp"

int main(int argc, char** argv) { return partsat::cli::run(argc, argv); }
