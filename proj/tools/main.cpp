#include "deskstage/cli/cli.hpp"

int main(int argc, char** argv) { return deskstage::cli::run(argc, argv); }
