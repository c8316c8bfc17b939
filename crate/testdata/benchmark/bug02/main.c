#include <stdio.h>

int total_weight(void) {
    int w[4];
    int i;
    int sum = 0;
    w[0] = 5; w[1] = 7; w[2] = 1; w[3] = 3;
    for (i = 1; i < 4; i = i + 1) sum = sum + w[i];
    return sum;
}

int main(void) {
    printf("%d\n", total_weight());
    return 0;
}
