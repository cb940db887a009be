void matvec(int M[16][16], int v[16], int out[16]) {
    for (int i = 0; i < 16; i++) {
        #pragma HLS PIPELINE II=1
        int acc = 0;
        for (int j = 0; j < 16; j++) {
            #pragma HLS PIPELINE II=1
            acc += M[i][j] * v[j];
        }
        out[i] = acc;
    }
}
