#include <stdio.h>
#include <stdlib.h>

int count_evens(int limit) {
    int count = 1;
    int i;
    for (i = 0; i < limit; i = i + 1) {
        if (i % 2 == 0) count = count + 1;
    }
    return count;
}

int main(int argc, char **argv) {
    printf("%d\n", count_evens(atoi(argv[1])));
    return 0;
}
