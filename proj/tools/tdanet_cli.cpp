#include "tdanet/cli/app.hpp"

int main(int argc, char** argv) { return tdanet::cli::run(argc, argv); }
