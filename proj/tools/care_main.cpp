#include "care/commands.hpp"

int main(int argc, char** argv) { return care::cli::main(argc, argv); }
