# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled revised-simplex pivot loop.

Same pivot rules and update order as the numpy fallback (_pure.py): Dantzig
pricing with a Bland fallback driven by the shared ``state`` array, ratio
test with clamped basic values and smallest-basic-index tie break, rank-one
basis-inverse update.  Arrays are modified in place.
"""

import numpy as np

from libc.stdint cimport int64_t

OPTIMAL = 0
UNBOUNDED = 1
BUDGET = 2


def pivot_chunk(
    int64_t[::1] indptr,
    int64_t[::1] indices,
    double[::1] data,
    double[::1] c,
    const unsigned char[::1] allow,
    unsigned char[::1] inbasis,
    int64_t[::1] basis,
    double[:, ::1] binv,
    double[::1] xb,
    int64_t[::1] state,
    int64_t max_pivots,
    double opt_tol,
    double piv_tol,
    double degen_tol,
    int64_t bland_after,
):
    cdef Py_ssize_t m = basis.shape[0]
    cdef Py_ssize_t n = c.shape[0]
    cdef Py_ssize_t pivots = 0
    cdef Py_ssize_t i, j, p, e, r
    cdef int64_t lo, hi
    cdef double best, zj, cb, theta, ratio, xbi, di, dr
    cdef double inf = float("inf")

    scratch_y = np.empty(m, dtype=np.float64)
    scratch_d = np.empty(m, dtype=np.float64)
    cdef double[::1] y = scratch_y
    cdef double[::1] d = scratch_d

    while pivots < max_pivots:
        # y = c_B @ binv
        for j in range(m):
            y[j] = 0.0
        for i in range(m):
            cb = c[basis[i]]
            if cb != 0.0:
                for j in range(m):
                    y[j] += cb * binv[i, j]

        # entering column: reduced costs on the fly
        e = -1
        best = opt_tol
        for j in range(n):
            if allow[j] == 0 or inbasis[j] != 0:
                continue
            zj = c[j]
            lo = indptr[j]
            hi = indptr[j + 1]
            for p in range(lo, hi):
                zj -= y[indices[p]] * data[p]
            if state[0] != 0:
                if zj > opt_tol:
                    e = j
                    break
            elif zj > best:
                best = zj
                e = j
        if e < 0:
            return OPTIMAL, pivots

        # d = binv @ A_e
        for i in range(m):
            d[i] = 0.0
        lo = indptr[e]
        hi = indptr[e + 1]
        for p in range(lo, hi):
            di = data[p]
            j = indices[p]
            for i in range(m):
                d[i] += binv[i, j] * di

        # ratio test
        r = -1
        theta = inf
        for i in range(m):
            if d[i] > piv_tol:
                xbi = xb[i]
                if xbi < 0.0:
                    xbi = 0.0
                ratio = xbi / d[i]
                if ratio < theta or (ratio == theta and r >= 0 and basis[i] < basis[r]):
                    theta = ratio
                    r = i
        if r < 0:
            return UNBOUNDED, pivots

        # rank-one update of binv, xb
        dr = d[r]
        for j in range(m):
            binv[r, j] /= dr
        for i in range(m):
            if i != r:
                di = d[i]
                if di != 0.0:
                    for j in range(m):
                        binv[i, j] -= di * binv[r, j]
                xb[i] -= theta * di
        xb[r] = theta
        inbasis[e] = 1
        inbasis[basis[r]] = 0
        basis[r] = e
        pivots += 1

        if theta <= degen_tol:
            state[1] += 1
            if state[1] > bland_after:
                state[0] = 1
        else:
            state[1] = 0
            state[0] = 0
    return BUDGET, pivots
