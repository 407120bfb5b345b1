#include <cstdio>
int main() { std::puts("hjbeam: CLI under construction"); return 0; }
