#include "commands.hpp"

int main(int argc, char** argv) { return fedfits::cli::main_entry(argc, argv); }
