#include "plugsense/cli.hpp"

int main(int argc, char** argv) { return plugsense::cli::run(argc, argv); }
