#include "routhsim/cli.hpp"

int main(int argc, char **argv) { return routhsim::run(argc, argv); }
