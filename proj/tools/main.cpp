#include "cprover/cli.hpp"

int main(int argc, char** argv) { return cprover::dispatch(argc, argv); }
