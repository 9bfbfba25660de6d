"""Pure numpy fallback for the simplex hot-loop kernels.

The compiled twin in _speedups.pyx implements the same three functions with
identical tie-breaking, so a solve takes the same pivot sequence either way.
State codes: 0 nonbasic-at-lower, 1 nonbasic-at-upper, 2 nonbasic-free,
3 basic.
"""

from __future__ import annotations

import numpy as np

IMPLEMENTATION = "python"

AT_LOWER = 0
AT_UPPER = 1
FREE = 2
BASIC = 3


def choose_entering(d, state, allowed, use_bland, tol):
    """Pick the entering column for a minimization step.

    Returns the column index, or -1 when no candidate improves (optimal).
    Dantzig mode takes the largest violation (ties: smallest index); Bland
    mode takes the smallest index with any violation.
    """
    viol = np.zeros_like(d)
    at_lower = state == AT_LOWER
    at_upper = state == AT_UPPER
    free = state == FREE
    np.negative(d, where=at_lower, out=viol)
    viol[at_upper] = d[at_upper]
    viol[free] = np.abs(d[free])
    viol[allowed == 0] = 0.0
    viol[state == BASIC] = 0.0
    mask = viol > tol
    if not mask.any():
        return -1
    if use_bland:
        return int(np.argmax(mask))
    # argmax returns the first (smallest-index) maximizer
    return int(np.argmax(viol))


def ratio_test(xB, w, lbB, ubB, basis, sigma, t_own, use_bland, pivot_tol):
    """Bounded-variable ratio test.

    Entering variable moves by t >= 0 in direction sigma; basic variable i
    changes by -sigma*w[i]*t. Returns (t, leave_pos); leave_pos = -1 means a
    bound flip at t = t_own (or an unbounded ray when t is inf).
    """
    delta = sigma * w
    t_min = np.inf
    tie = []
    tie_eps = 1e-10
    m = xB.shape[0]
    for i in range(m):
        di = delta[i]
        if di > pivot_tol:
            lo = lbB[i]
            if lo == -np.inf:
                continue
            r = (xB[i] - lo) / di
        elif di < -pivot_tol:
            hi = ubB[i]
            if hi == np.inf:
                continue
            r = (xB[i] - hi) / di
        else:
            continue
        if r < 0.0:
            r = 0.0
        if r < t_min - tie_eps:
            t_min = r
            tie = [i]
        elif r <= t_min + tie_eps:
            if r < t_min:
                t_min = r
            tie.append(i)
    if t_own <= t_min:
        return float(t_own), -1
    if not tie:
        return np.inf, -1
    if use_bland:
        best = tie[0]
        for i in tie[1:]:
            if basis[i] < basis[best]:
                best = i
    else:
        best = tie[0]
        best_mag = abs(w[best])
        for i in tie[1:]:
            mag = abs(w[i])
            if mag > best_mag:
                best = i
                best_mag = mag
    return float(t_min), int(best)


def eta_update(Binv, w, r):
    """Rank-1 basis-inverse update after a pivot on row r (in place)."""
    pivot = w[r]
    Binv[r, :] /= pivot
    col = w.copy()
    col[r] = 0.0
    Binv -= np.outer(col, Binv[r, :])
