# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled pointwise curvature kernels.

Batched Christoffel-symbol and lowered-Riemann assembly; these dominate
runtime when curvature is sampled over large tensor-product grids.
"""

import numpy as np
cimport numpy as cnp

cnp.import_array()


def christoffel_batch(double[:, :, ::1] ginv, double[:, :, :, ::1] dg):
    cdef Py_ssize_t N = ginv.shape[0]
    cdef Py_ssize_t n = ginv.shape[1]
    cdef Py_ssize_t p, l, i, j, m
    cdef double acc
    out_arr = np.empty((N, n, n, n))
    cdef double[:, :, :, ::1] out = out_arr
    for p in range(N):
        for l in range(n):
            for i in range(n):
                for j in range(n):
                    acc = 0.0
                    for m in range(n):
                        acc += ginv[p, l, m] * (dg[p, i, j, m] + dg[p, j, i, m] - dg[p, m, i, j])
                    out[p, l, i, j] = 0.5 * acc
    return out_arr


def riemann_batch(double[:, :, ::1] g, double[:, :, :, ::1] dg,
                  double[:, :, :, :, ::1] d2g, double[:, :, :, ::1] gamma):
    cdef Py_ssize_t N = g.shape[0]
    cdef Py_ssize_t n = g.shape[1]
    cdef Py_ssize_t p, i, j, k, l, m, q
    cdef double acc, quad
    out_arr = np.empty((N, n, n, n, n))
    cdef double[:, :, :, :, ::1] out = out_arr
    for p in range(N):
        for i in range(n):
            for j in range(n):
                for k in range(n):
                    for l in range(n):
                        acc = 0.5 * (d2g[p, j, k, i, l] + d2g[p, i, l, j, k]
                                     - d2g[p, j, l, i, k] - d2g[p, i, k, j, l])
                        quad = 0.0
                        for m in range(n):
                            for q in range(n):
                                quad += g[p, m, q] * (gamma[p, m, j, k] * gamma[p, q, i, l]
                                                      - gamma[p, m, j, l] * gamma[p, q, i, k])
                        out[p, i, j, k, l] = acc + quad
    return out_arr
