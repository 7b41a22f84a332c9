#include "eecsim/harness.hpp"

int main(int argc, char** argv) { return eecsim::cli_main(argc, argv); }
