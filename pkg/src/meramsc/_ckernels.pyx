# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled inner-loop kernels; same contracts as ``_kernels_py``."""
import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt

cnp.import_array()


def kmeans_assign(x, centers):
    cdef const double[:, ::1] X = np.ascontiguousarray(x, dtype=np.float64)
    cdef const double[:, ::1] C = np.ascontiguousarray(centers, dtype=np.float64)
    cdef Py_ssize_t n = X.shape[0], d = X.shape[1], k = C.shape[0]
    cdef Py_ssize_t i, j, t, best
    cdef double acc, diff, bestd
    labels = np.empty(n, dtype=np.int64)
    dist = np.empty(n, dtype=np.float64)
    cdef cnp.int64_t[::1] L = labels
    cdef double[::1] D = dist
    for i in range(n):
        best = 0
        bestd = 0.0
        for j in range(k):
            acc = 0.0
            for t in range(d):
                diff = X[i, t] - C[j, t]
                acc = acc + diff * diff
            if j == 0 or acc < bestd:
                bestd = acc
                best = j
        L[i] = best
        D[i] = bestd
    return labels, dist


def kmeans_update(x, labels, Py_ssize_t k):
    cdef const double[:, ::1] X = np.ascontiguousarray(x, dtype=np.float64)
    cdef const cnp.int64_t[::1] L = np.ascontiguousarray(labels, dtype=np.int64)
    cdef Py_ssize_t n = X.shape[0], d = X.shape[1]
    cdef Py_ssize_t i, t, c
    sums = np.zeros((k, d), dtype=np.float64)
    counts = np.zeros(k, dtype=np.int64)
    cdef double[:, ::1] S = sums
    cdef cnp.int64_t[::1] N = counts
    for i in range(n):
        c = L[i]
        if c < 0 or c >= k:
            raise IndexError(f"label {c} out of range for k={k}")
        N[c] += 1
        for t in range(d):
            S[c, t] += X[i, t]
    return sums, counts


def l21_shrink(d, double tau):
    # column-major copy so each column is contiguous
    cdef const double[::1, :] Dm = np.asfortranarray(d, dtype=np.float64)
    cdef Py_ssize_t rows = Dm.shape[0], cols = Dm.shape[1]
    cdef Py_ssize_t i, j
    cdef double nrm, scale
    out = np.zeros((rows, cols), dtype=np.float64, order="F")
    cdef double[::1, :] E = out
    for j in range(cols):
        nrm = 0.0
        for i in range(rows):
            nrm += Dm[i, j] * Dm[i, j]
        nrm = sqrt(nrm)
        if nrm > tau:
            scale = (nrm - tau) / nrm
            for i in range(rows):
                E[i, j] = Dm[i, j] * scale
    return out


def contingency(a, b, Py_ssize_t na, Py_ssize_t nb):
    cdef const cnp.int64_t[::1] A = np.ascontiguousarray(a, dtype=np.int64)
    cdef const cnp.int64_t[::1] B = np.ascontiguousarray(b, dtype=np.int64)
    cdef Py_ssize_t n = A.shape[0], i
    if B.shape[0] != n:
        raise ValueError("label arrays differ in length")
    out = np.zeros((na, nb), dtype=np.int64)
    cdef cnp.int64_t[:, ::1] M = out
    for i in range(n):
        if A[i] < 0 or A[i] >= na or B[i] < 0 or B[i] >= nb:
            raise IndexError("label code out of range")
        M[A[i], B[i]] += 1
    return out
