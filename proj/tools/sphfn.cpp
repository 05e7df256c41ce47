#include "sphfn/cli.hpp"

int main(int argc, char** argv) { return sphfn::cli::run(argc, argv); }
