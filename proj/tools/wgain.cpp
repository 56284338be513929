#include "wgain/cli.hpp"

int main(int argc, char** argv) { return wgain::dispatch(argc, argv); }
