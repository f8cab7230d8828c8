#include "sgsg/cli.hpp"

int main(int argc, char** argv) { return sgsg::run_cli(argc, argv); }
