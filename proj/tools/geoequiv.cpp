#include "geoequiv/cli.hpp"

int main(int argc, char** argv) { return geoequiv::cli::run(argc, argv); }
