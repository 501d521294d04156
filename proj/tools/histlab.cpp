#include "histlab/cli/app.hpp"

int main(int argc, char** argv) { return histlab::cli::main_entry(argc, argv); }
