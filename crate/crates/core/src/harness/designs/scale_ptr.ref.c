void scale(int k, int in[32], int out[32]) {
    int gain;
    gain = k;
    for (int i = 0; i < 32; i++) {
        out[i] = in[i] * gain;
    }
}
