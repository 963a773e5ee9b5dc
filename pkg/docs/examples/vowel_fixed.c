#include <stdio.h>
int main() {
    int n, i;
    char c;
    int flag = 0;
    scanf("%d", &n);
    for (i = 0; i < n; i = i + 1) {
        scanf(" %c", &c);
        if ((c == 'a') || (c == 'e') || (c == 'i') || (c == 'o') || (c == 'u')) {
            flag = 1;
        }
    }
    if (flag == 1) {
        printf("Special");
    } else {
        printf("Normal");
    }
    return 0;
}
