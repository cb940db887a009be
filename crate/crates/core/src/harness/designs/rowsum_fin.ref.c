void rowsum(int M[16][16], int out[16]) {
    for (int i = 0; i < 16; i++) {
        out[i] = 0;
        for (int j = 0; j < 16; j++) {
            out[i] = out[i] + M[i][j];
        }
    }
}
