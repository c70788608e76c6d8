#include "regensim/cli.hpp"

int main(int argc, char** argv) { return regensim::cli::run_main(argc, argv); }
