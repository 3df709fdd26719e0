#include "pcz/io.hpp"
int main() { return 0; }
