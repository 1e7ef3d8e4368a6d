# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled versions of the hot numeric kernels.

Must match mergap.kernels._pure bit-for-bit in shape and semantics; the
test suite checks numerical agreement between the two backends.
"""

from libc.math cimport log

import numpy as np
cimport numpy as cnp

cnp.import_array()


def pairwise_sq_dists(x, y):
    cdef double[:, ::1] a = np.ascontiguousarray(x, dtype=np.float64)
    cdef double[:, ::1] b = np.ascontiguousarray(y, dtype=np.float64)
    cdef Py_ssize_t n = a.shape[0], m = b.shape[0], d = a.shape[1]
    cdef cnp.ndarray[cnp.float64_t, ndim=2] out = np.empty((n, m), dtype=np.float64)
    cdef double[:, ::1] o = out
    cdef Py_ssize_t i, j, k
    cdef double acc, diff
    for i in range(n):
        for j in range(m):
            acc = 0.0
            for k in range(d):
                diff = a[i, k] - b[j, k]
                acc += diff * diff
            o[i, j] = acc
    return out


def kmeans_assign(points, centers):
    cdef double[:, ::1] p = np.ascontiguousarray(points, dtype=np.float64)
    cdef double[:, ::1] c = np.ascontiguousarray(centers, dtype=np.float64)
    cdef Py_ssize_t n = p.shape[0], k = c.shape[0], d = p.shape[1]
    cdef cnp.ndarray[cnp.int64_t, ndim=1] assign = np.empty(n, dtype=np.int64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] dist = np.empty(n, dtype=np.float64)
    cdef long long[::1] av = assign
    cdef double[::1] dv = dist
    cdef Py_ssize_t i, j, q, best
    cdef double acc, diff, bestd
    for i in range(n):
        best = 0
        bestd = -1.0
        for j in range(k):
            acc = 0.0
            for q in range(d):
                diff = p[i, q] - c[j, q]
                acc += diff * diff
            if bestd < 0.0 or acc < bestd:
                bestd = acc
                best = j
        av[i] = best
        dv[i] = bestd
    return assign, dist


def tsne_grad(p, y):
    cdef double[:, ::1] pm = np.ascontiguousarray(p, dtype=np.float64)
    cdef double[:, ::1] ym = np.ascontiguousarray(y, dtype=np.float64)
    cdef Py_ssize_t n = ym.shape[0], d = ym.shape[1]
    cdef cnp.ndarray[cnp.float64_t, ndim=2] num_arr = np.empty((n, n), dtype=np.float64)
    cdef double[:, ::1] num = num_arr
    cdef Py_ssize_t i, j, k
    cdef double acc, diff, z = 0.0
    for i in range(n):
        num[i, i] = 0.0
        for j in range(i + 1, n):
            acc = 0.0
            for k in range(d):
                diff = ym[i, k] - ym[j, k]
                acc += diff * diff
            acc = 1.0 / (1.0 + acc)
            num[i, j] = acc
            num[j, i] = acc
            z += 2.0 * acc
    cdef cnp.ndarray[cnp.float64_t, ndim=2] grad_arr = np.zeros((n, d), dtype=np.float64)
    cdef double[:, ::1] grad = grad_arr
    cdef double q, pqn, kl = 0.0, rowsum
    for i in range(n):
        rowsum = 0.0
        for j in range(n):
            if i == j:
                continue
            q = num[i, j] / z
            if q < 1e-12:
                q = 1e-12
            pqn = (pm[i, j] - q) * num[i, j]
            rowsum += pqn
            for k in range(d):
                grad[i, k] -= 4.0 * pqn * ym[j, k]
            if pm[i, j] > 0.0:
                kl += pm[i, j] * log(pm[i, j] / q)
        for k in range(d):
            grad[i, k] += 4.0 * rowsum * ym[i, k]
    return grad_arr, kl
