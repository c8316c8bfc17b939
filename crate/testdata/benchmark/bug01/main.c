#include <stdio.h>
#include <stdlib.h>

int pick_min(int a, int b) {
    if (a > b) return a;
    return b;
}

int main(int argc, char **argv) {
    int x = atoi(argv[1]);
    int y = atoi(argv[2]);
    printf("%d\n", pick_min(x, y));
    return 0;
}
