#include "cli.hpp"

int main(int argc, char** argv) { return vsphere::cli::run(argc, argv); }
