int fir(int x[8], int h[8]) {
    int acc = 0;
    for (int t = 0; t < 8; t++) {
        acc += x[t] * h[t];
    }
    return acc;
}
