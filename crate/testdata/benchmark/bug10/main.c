#include <stdio.h>

struct item { int weight; };

int item_weight(struct item *it) {
    int w = 0;
    w = it->weight;
    return w;
}

int main(int argc, char **argv) {
    struct item box;
    box.weight = 42;
    if (argc > 1)
        printf("%d\n", item_weight(&box));
    else
        printf("%d\n", item_weight(0));
    return 0;
}
