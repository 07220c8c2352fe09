#include "sdgam/experiment.hpp"

int main(int argc, char** argv) { return sdgam::run_cli(argc, argv); }
