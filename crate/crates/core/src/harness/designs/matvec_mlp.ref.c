void matvec(int M[16][16], int v[16], int out[16]) {
    for (int i = 0; i < 16; i++) {
        int acc = 0;
        for (int j = 0; j < 16; j++) {
            acc += M[i][j] * v[j];
        }
        out[i] = acc;
    }
}
