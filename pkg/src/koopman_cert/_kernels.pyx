# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot kernels: batched finite-chain stepping and transition counts.

Semantics match koopman_cert._kernels_py exactly (same uniforms in, same
states out, bit for bit).
"""

import numpy as np


def chain_paths(cdf, x0, u):
    """See koopman_cert._kernels_py.chain_paths."""
    cdef const double[:, ::1] cdfv = np.ascontiguousarray(cdf, dtype=np.float64)
    cdef const long long[::1] x0v = np.ascontiguousarray(x0, dtype=np.int64)
    cdef const double[:, ::1] uv = np.ascontiguousarray(u, dtype=np.float64)
    cdef Py_ssize_t B = uv.shape[0]
    cdef Py_ssize_t m = uv.shape[1]
    cdef Py_ssize_t n = cdfv.shape[0]
    paths = np.empty((B, m + 1), dtype=np.int64)
    cdef long long[:, ::1] pv = paths
    cdef Py_ssize_t b, k, j, nxt
    cdef long long cur
    cdef double uu
    with nogil:
        for b in range(B):
            cur = x0v[b]
            pv[b, 0] = cur
            for k in range(m):
                uu = uv[b, k]
                # first j with uu < cdf[cur, j]; all-False falls back to 0
                nxt = 0
                for j in range(n):
                    if uu < cdfv[cur, j]:
                        nxt = j
                        break
                cur = nxt
                pv[b, k + 1] = cur
    return paths


def pair_counts(paths, n_states):
    """See koopman_cert._kernels_py.pair_counts."""
    cdef const long long[:, ::1] pv = np.ascontiguousarray(paths, dtype=np.int64)
    cdef Py_ssize_t B = pv.shape[0]
    cdef Py_ssize_t m = pv.shape[1] - 1
    cdef Py_ssize_t n = n_states
    counts = np.zeros((B, n, n), dtype=np.int64)
    cdef long long[:, :, ::1] cv = counts
    cdef Py_ssize_t b, k
    with nogil:
        for b in range(B):
            for k in range(m):
                cv[b, pv[b, k], pv[b, k + 1]] += 1
    return counts
