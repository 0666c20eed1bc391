#include "ximpact/cli.hpp"

int main(int argc, char** argv) { return ximpact::cli::run(argc, argv); }
