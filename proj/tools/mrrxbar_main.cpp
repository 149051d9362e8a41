#include "mrrxbar/cli.hpp"

int main(int argc, char** argv) { return mrrxbar::run_cli(argc, argv); }
