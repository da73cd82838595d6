#include "mce/cli.hpp"

int main(int argc, char** argv) { return mce::cli::main(argc, argv); }
