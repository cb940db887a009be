void vadd(int a[64], int b[64], int c[64]) {
    int *buf = new int[64];
    for (int i = 0; i < 64; i++) {
        buf[i] = a[i] + b[i];
    }
    for (int i = 0; i < 64; i++) {
        c[i] = buf[i];
    }
}
