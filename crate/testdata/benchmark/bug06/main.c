#include <stdio.h>
#include <stdlib.h>

int scale(int num, int den) {
    return (num * 10) / den;
}

int ratio_of(int a, int b) {
    int r;
    r = scale(b, a);
    return r;
}

int main(int argc, char **argv) {
    printf("%d\n", ratio_of(atoi(argv[1]), atoi(argv[2])));
    return 0;
}
