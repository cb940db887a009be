// C = alpha * A B + beta * C
void gemm(int alpha, int beta, int C[N][N], int A[N][N], int B[N][N]) {
    for (int i = 0; i < N; i++) {
        for (int j = 0; j < N; j++) {
            C[i][j] *= beta;
        }
        for (int k = 0; k < N; k++) {
            for (int j = 0; j < N; j++) {
                C[i][j] += alpha * A[i][k] * B[k][j];
            }
        }
    }
}
