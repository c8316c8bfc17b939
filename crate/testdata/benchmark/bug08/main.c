#include <stdio.h>

int probe(void) {
    return 7;
}

int read_status(void) {
    int rc = 0;
    rc = probe();
    return 0;
}

int main(void) {
    printf("%d\n", read_status());
    return 0;
}
