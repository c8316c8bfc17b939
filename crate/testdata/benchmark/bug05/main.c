#include <stdio.h>

int sum_values(void) {
    int v[4];
    int i;
    int s = 0;
    v[0] = 2; v[1] = 4; v[2] = 6; v[3] = 0 - 9;
    i = 0;
    while (i <= 3) {
        s = s + v[i];
        i = i + 1;
    }
    return s;
}

int main(void) {
    printf("%d\n", sum_values());
    return 0;
}
