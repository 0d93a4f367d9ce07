# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled systematic-scan Gibbs sweep kernel; mirror of lrfs._sgs_py."""

import numpy as np


def run_sweeps(double[:, ::1] eta, long long[::1] init, double[:, ::1] uniforms):
    """Same contract as lrfs._sgs_py.run_sweeps."""
    cdef Py_ssize_t P = eta.shape[0]
    cdef Py_ssize_t W = eta.shape[1]
    cdef Py_ssize_t M = W - 2
    cdef Py_ssize_t T = uniforms.shape[0]
    out_arr = np.empty((T, P), dtype=np.int64)
    state_arr = np.empty(P, dtype=np.int64)
    owner_arr = np.full(M + 1, -1, dtype=np.int64)
    cum_arr = np.empty(W, dtype=np.float64)
    cdef long long[:, ::1] out = out_arr
    cdef long long[::1] state = state_arr
    cdef long long[::1] owner = owner_arr
    cdef double[::1] cum = cum_arr
    cdef Py_ssize_t t, i, c
    cdef long long old_j, new_j, o
    cdef double total, u, v

    for i in range(P):
        state[i] = init[i]
        if state[i] > 0:
            if owner[state[i]] != -1:
                raise ValueError("init is not positive 1-1")
            owner[state[i]] = i

    for t in range(T):
        for i in range(P):
            total = eta[i, 0] + eta[i, 1]
            cum[0] = eta[i, 0]
            cum[1] = total
            for c in range(2, W):
                o = owner[c - 1]
                v = eta[i, c]
                if o != -1 and o != i:
                    v = 0.0
                total += v
                cum[c] = total
            if total <= 0.0:
                raise ValueError(f"all-zero conditional for row {i}")
            u = uniforms[t, i] * total
            c = 0
            while cum[c] <= u and c < W - 1:
                c += 1
            new_j = c - 1
            old_j = state[i]
            if old_j > 0:
                owner[old_j] = -1
            if new_j > 0:
                owner[new_j] = i
            state[i] = new_j
        for i in range(P):
            out[t, i] = state[i]
    return out_arr
