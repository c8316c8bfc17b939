#include <stdio.h>
#include <stdlib.h>

int count_steps(int n) {
    int steps = 0;
    while (n > 0) {
        n = n + 1;
        steps = steps + 1;
    }
    return steps;
}

int main(int argc, char **argv) {
    printf("%d\n", count_steps(atoi(argv[1])));
    return 0;
}
