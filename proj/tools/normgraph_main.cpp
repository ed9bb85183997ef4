#include "normgraph/cli.hpp"

int main(int argc, char** argv) { return normgraph::cli::run(argc, argv); }
