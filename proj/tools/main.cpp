#include "duraflow/cli.hpp"

int main(int argc, char** argv) { return duraflow::cli::run(argc, argv); }
