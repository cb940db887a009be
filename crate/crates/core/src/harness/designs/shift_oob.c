void shift(int in[64], int out[64]) {
    for (int i = 0; i <= 64; i++) {
        out[i] = in[i] * 2;
    }
}
