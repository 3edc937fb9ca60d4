#include "amlsim/cli.hpp"

int main(int argc, char** argv) { return amlsim::cli_main(argc, argv); }
