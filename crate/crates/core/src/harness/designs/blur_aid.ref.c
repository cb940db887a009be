void blur(int img[16][16], int out[16][16]) {
    for (int r = 0; r < 16; r++) {
        for (int c = 0; c < 15; c++) {
            out[r][c] = img[r][c] + img[r][c + 1];
        }
        out[r][15] = img[r][15];
    }
}
