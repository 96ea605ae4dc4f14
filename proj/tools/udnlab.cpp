#include "udn/cli.hpp"

int main(int argc, char** argv) { return udn::run_cli(argc, argv); }
