# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled twins of the simplex hot-loop kernels.

Must make exactly the same choices as _kernels_py (same candidate rules, same
tie-breaking) so that solves pivot identically on either implementation.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport INFINITY, fabs

IMPLEMENTATION = "cython"

DEF AT_LOWER = 0
DEF AT_UPPER = 1
DEF FREE = 2
DEF BASIC = 3


def choose_entering(double[:] d, signed char[:] state, unsigned char[:] allowed,
                    bint use_bland, double tol):
    cdef Py_ssize_t n = d.shape[0]
    cdef Py_ssize_t j, best = -1
    cdef double v, best_v = tol
    cdef signed char st
    for j in range(n):
        if allowed[j] == 0:
            continue
        st = state[j]
        if st == BASIC:
            continue
        if st == AT_LOWER:
            v = -d[j]
        elif st == AT_UPPER:
            v = d[j]
        else:
            v = fabs(d[j])
        if v > tol:
            if use_bland:
                return j
            if v > best_v:
                best_v = v
                best = j
    return best


def ratio_test(double[:] xB, double[:] w, double[:] lbB, double[:] ubB,
               cnp.intp_t[:] basis, double sigma, double t_own,
               bint use_bland, double pivot_tol):
    cdef Py_ssize_t m = xB.shape[0]
    cdef Py_ssize_t i, k, best
    cdef double di, r, lo, hi, mag, best_mag
    cdef double t_min = INFINITY
    cdef double tie_eps = 1e-10
    cdef cnp.ndarray[cnp.intp_t, ndim=1] tie_buf = np.empty(m if m else 1, dtype=np.intp)
    cdef cnp.intp_t[:] tie = tie_buf
    cdef Py_ssize_t n_tie = 0
    for i in range(m):
        di = sigma * w[i]
        if di > pivot_tol:
            lo = lbB[i]
            if lo == -INFINITY:
                continue
            r = (xB[i] - lo) / di
        elif di < -pivot_tol:
            hi = ubB[i]
            if hi == INFINITY:
                continue
            r = (xB[i] - hi) / di
        else:
            continue
        if r < 0.0:
            r = 0.0
        if r < t_min - tie_eps:
            t_min = r
            tie[0] = i
            n_tie = 1
        elif r <= t_min + tie_eps:
            if r < t_min:
                t_min = r
            tie[n_tie] = i
            n_tie += 1
    if t_own <= t_min:
        return float(t_own), -1
    if n_tie == 0:
        return float(INFINITY), -1
    best = tie[0]
    if use_bland:
        for k in range(1, n_tie):
            i = tie[k]
            if basis[i] < basis[best]:
                best = i
    else:
        best_mag = fabs(w[best])
        for k in range(1, n_tie):
            i = tie[k]
            mag = fabs(w[i])
            if mag > best_mag:
                best = i
                best_mag = mag
    return float(t_min), int(best)


def eta_update(double[:, :] Binv, double[:] w, Py_ssize_t r):
    cdef Py_ssize_t m = Binv.shape[0]
    cdef Py_ssize_t n = Binv.shape[1]
    cdef Py_ssize_t i, k
    cdef double pivot = w[r]
    cdef double wi
    for k in range(n):
        Binv[r, k] /= pivot
    for i in range(m):
        if i == r:
            continue
        wi = w[i]
        if wi == 0.0:
            continue
        for k in range(n):
            Binv[i, k] -= wi * Binv[r, k]
