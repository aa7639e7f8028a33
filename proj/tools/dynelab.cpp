#include <dynelab/cli.hpp>

int main(int argc, char** argv) { return dynelab::cli::run(argc, argv); }
