#include <stdio.h>
#include <stdlib.h>

int balance_after(int start, int add1, int add2) {
    int total = start;
    total = total - add1;
    total = total + add2;
    return total;
}

int main(int argc, char **argv) {
    int s = atoi(argv[1]);
    int a = atoi(argv[2]);
    int b = atoi(argv[3]);
    printf("%d\n", balance_after(s, a, b));
    return 0;
}
