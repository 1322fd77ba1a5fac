#include "rbc/app/cli.hpp"

int main(int argc, char** argv) { return rbc::app::run_cli(argc, argv); }
