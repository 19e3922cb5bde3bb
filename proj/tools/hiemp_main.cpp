#include "hiemp/cli.hpp"

int main(int argc, char** argv) { return hiemp::run_cli(argc, argv); }
