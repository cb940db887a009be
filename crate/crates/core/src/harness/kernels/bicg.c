// s = A^T r, q = A p
void bicg(int A[N][N], int s[N], int q[N], int p[N], int r[N]) {
    for (int i = 0; i < N; i++) {
        s[i] = 0;
    }
    for (int i = 0; i < N; i++) {
        q[i] = 0;
        for (int j = 0; j < N; j++) {
            s[j] = s[j] + r[i] * A[i][j];
            q[i] = q[i] + A[i][j] * p[j];
        }
    }
}
