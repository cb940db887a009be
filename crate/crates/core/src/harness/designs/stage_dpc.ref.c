void stage(int in[32], int out[32]) {
    int mid[32];
    for (int i = 0; i < 32; i++) {
        mid[i] = in[i] + 1;
    }
    for (int i = 1; i < 32; i++) {
        mid[i] = mid[i] + mid[i - 1];
    }
    for (int i = 0; i < 32; i++) {
        out[i] = mid[i];
    }
}
