#include "vxf/cli.h"

int main(int argc, char** argv) { return vxf::run_cli(argc, argv); }
