void hist(int data[64], int bins[8]) {
    for (int b = 0; b < 8; b++) {
        bins[b] = 0;
    }
    for (int i = 0; i < 64; i++) {
        trace_sample(i);
        bins[abs(data[i]) % 8] = bins[abs(data[i]) % 8] + 1;
    }
}
