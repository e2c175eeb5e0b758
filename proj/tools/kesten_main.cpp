#include <cstdio>
int main(){ std::puts("kesten stub"); return 0; }
