#include "mpmg_cli.hpp"

int main(int argc, char** argv) { return mpmg::cli::RunCli(argc, argv); }
