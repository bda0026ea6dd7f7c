#include "adaptsurv.h"

int main(int argc, char** argv) { return as_run(argc, (const char* const*)argv); }
