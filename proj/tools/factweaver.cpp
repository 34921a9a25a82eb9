#include "factweaver/cli.hpp"

int main(int argc, char** argv) { return factweaver::cli::run(argc, argv); }
