#include "rmfem/experiments.hpp"

int main(int argc, char** argv) { return rmfem::cli_main(argc, argv); }
