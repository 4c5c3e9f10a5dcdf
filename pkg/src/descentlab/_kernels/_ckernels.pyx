# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled SGD epoch: same contract as ``_pykernels.sgd_epoch``.

Matrix products go through scipy's BLAS bindings on preallocated buffers,
so the per-batch Python and allocation overhead of the numpy version is
gone.  All arrays are C-contiguous float64.
"""

import numpy as np

from libc.string cimport memcpy
from scipy.linalg.cython_blas cimport dgemm


cdef inline void rm_gemm(char ta, char tb, int m, int n, int k, double alpha,
                         const double* A, int lda, const double* B, int ldb,
                         double beta, double* C, int ldc) noexcept nogil:
    # row-major C(m x n) = alpha op(A) op(B) + beta C, via column-major dgemm on C^T
    dgemm(&tb, &ta, &n, &m, &k, &alpha, <double*>B, &ldb, <double*>A, &lda, &beta, C, &ldc)


def sgd_epoch(double[:, ::1] W1, double[::1] b1, double[:, ::1] W2, double[::1] b2,
              const double[:, ::1] X, const double[:, ::1] Z, const long long[::1] order,
              Py_ssize_t batch_size, double lr):
    cdef Py_ssize_t n = order.shape[0]
    cdef int h = W1.shape[0]
    cdef int P = X.shape[1]
    cdef int K = Z.shape[1]
    cdef int bs = <int>batch_size
    cdef int hl = h if h > 0 else 1

    cdef double[:, ::1] xb = np.empty((bs, P))
    cdef double[:, ::1] zb = np.empty((bs, K))
    cdef double[:, ::1] pre = np.zeros((bs, hl))
    cdef double[:, ::1] act = np.zeros((bs, hl))
    cdef double[:, ::1] out = np.empty((bs, K))
    cdef double[:, ::1] g_pre = np.zeros((bs, hl))

    cdef double total = 0.0
    cdef double scale, d, s
    cdef Py_ssize_t start, i, j, r
    cdef int b

    with nogil:
        start = 0
        while start < n:
            b = <int>(bs if start + bs <= n else n - start)
            for i in range(b):
                r = order[start + i]
                memcpy(&xb[i, 0], &X[r, 0], P * sizeof(double))
                memcpy(&zb[i, 0], &Z[r, 0], K * sizeof(double))

            if h > 0:
                rm_gemm(b'N', b'T', b, h, P, 1.0, &xb[0, 0], P, &W1[0, 0], P, 0.0, &pre[0, 0], h)
                for i in range(b):
                    for j in range(h):
                        pre[i, j] += b1[j]
                        act[i, j] = pre[i, j] if pre[i, j] > 0.0 else 0.0
                rm_gemm(b'N', b'T', b, K, h, 1.0, &act[0, 0], h, &W2[0, 0], h, 0.0, &out[0, 0], K)
            else:
                for i in range(b):
                    for j in range(K):
                        out[i, j] = 0.0

            scale = 2.0 / (b * K)
            for i in range(b):
                for j in range(K):
                    d = out[i, j] + b2[j] - zb[i, j]
                    total += d * d
                    out[i, j] = d * scale          # out now holds dLoss/dout

            for j in range(K):
                s = 0.0
                for i in range(b):
                    s += out[i, j]
                b2[j] -= lr * s

            if h > 0:
                # hidden gradient uses W2 before its update
                rm_gemm(b'N', b'N', b, h, K, 1.0, &out[0, 0], K, &W2[0, 0], h, 0.0, &g_pre[0, 0], h)
                rm_gemm(b'T', b'N', K, h, b, -lr, &out[0, 0], K, &act[0, 0], h, 1.0, &W2[0, 0], h)
                for i in range(b):
                    for j in range(h):
                        if pre[i, j] <= 0.0:
                            g_pre[i, j] = 0.0
                for j in range(h):
                    s = 0.0
                    for i in range(b):
                        s += g_pre[i, j]
                    b1[j] -= lr * s
                rm_gemm(b'T', b'N', h, P, b, -lr, &g_pre[0, 0], h, &xb[0, 0], P, 1.0, &W1[0, 0], P)
            start += b
    return total
