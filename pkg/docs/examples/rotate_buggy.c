#include <stdio.h>
int main() {
    int n, d, i, j;
    int arr[100];
    scanf("%d %d", &n, &d);
    for (i = 0; i < n; i++) {
        scanf("%d", &arr[i]);
    }
    for (j = d + 1; j < n; j++) {
        printf("%d ", arr[j]);
    }
    for (j = 0; j <= d; j++) {
        printf("%d ", arr[j]);
    }
    printf("\n");
    return 0;
}
