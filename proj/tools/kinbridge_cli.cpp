#include "kinbridge/experiments.hpp"

int main(int argc, char** argv) { return kinbridge::run_cli(argc, argv); }
