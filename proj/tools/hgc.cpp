#include "hgc/cli.hpp"

int main(int argc, char** argv) { return hgc::cli::run(argc, argv); }
