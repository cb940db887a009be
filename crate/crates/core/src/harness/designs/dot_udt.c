long dot(int a[32], int b[32]) {
    long long acc = 0;
    for (int i = 0; i < 32; i++) {
        acc += a[i] * b[i];
    }
    return acc;
}
