#include <stdio.h>
#include <stdlib.h>

int in_range(int x, int lo, int hi) {
    if (x < lo && x > hi) return 0;
    return 1;
}

int main(int argc, char **argv) {
    int x = atoi(argv[1]);
    int lo = atoi(argv[2]);
    int hi = atoi(argv[3]);
    printf("%d\n", in_range(x, lo, hi));
    return 0;
}
