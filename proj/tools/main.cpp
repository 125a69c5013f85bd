#include "nestkrig/cli_io.hpp"

int main(int argc, char **argv) { return nestkrig::run_command(argc, argv); }
