"""Independent oracles for the test suite.

Deliberately share no code with the package: the LP oracle is a textbook
Big-M tableau simplex with Bland's rule, the MILP oracle enumerates binary
assignments, and network helpers re-derive values from first principles.
"""

from __future__ import annotations

import itertools

import numpy as np

INF = float("inf")


# ---------------------------------------------------------------------------
# Textbook tableau simplex (Big-M, Bland's rule)
# ---------------------------------------------------------------------------


def tableau_simplex(sense, c, constraints, lower, upper, max_iter=20000):
    """Solve max/min c'x with row constraints and finite-or-infinite bounds.

    constraints: list of (coeffs, relation, rhs). Returns (status, value, x)
    with status in {"optimal", "infeasible", "unbounded"}. Bounds are turned
    into explicit rows; every variable is split into x = x+ - x- so the
    standard nonnegative tableau applies. Slow but simple.
    """
    c = np.asarray(c, dtype=float)
    n = c.shape[0]
    rows = [(np.asarray(a, dtype=float), rel, float(r)) for a, rel, r in constraints]
    for j in range(n):
        e = np.zeros(n)
        e[j] = 1.0
        if np.isfinite(lower[j]):
            rows.append((e.copy(), ">=", float(lower[j])))
        if np.isfinite(upper[j]):
            rows.append((e.copy(), "<=", float(upper[j])))

    # split free variables: y = [x+; x-], x = x+ - x-
    def split(a):
        return np.concatenate([a, -a])

    m = len(rows)
    nn = 2 * n
    # normalize to A y (<=,=,>=) b with b >= 0
    A = np.zeros((m, nn))
    b = np.zeros(m)
    rel = []
    for i, (a, r, rhs) in enumerate(rows):
        aa, rr, bb = split(a), r, rhs
        if bb < 0:
            aa, bb = -aa, -bb
            rr = {"<=": ">=", ">=": "<=", "=": "="}[rr]
        A[i] = aa
        b[i] = bb
        rel.append(rr)

    big_m = 1e7 * (1.0 + float(np.max(np.abs(c))) if c.size else 1.0)
    cols = [A]
    obj = [(-1.0 if sense == "min" else 1.0) * split(c)]  # maximize internally
    basis = [None] * m
    n_cols = nn
    slack_cols = []
    for i, r in enumerate(rel):
        if r == "<=":
            e = np.zeros(m)
            e[i] = 1.0
            slack_cols.append(e)
            obj.append(np.array([0.0]))
            basis[i] = n_cols
            n_cols += 1
        elif r == ">=":
            e = np.zeros(m)
            e[i] = -1.0
            slack_cols.append(e)
            obj.append(np.array([0.0]))
            n_cols += 1
    T = np.hstack([A] + [col[:, None] for col in slack_cols]) if slack_cols else A.copy()
    cvec = np.concatenate(obj)
    # artificials for rows lacking a basic column
    for i in range(m):
        if basis[i] is None:
            e = np.zeros(m)
            e[i] = 1.0
            T = np.hstack([T, e[:, None]])
            cvec = np.concatenate([cvec, [-big_m]])
            basis[i] = T.shape[1] - 1
    art_start = n_cols
    n_cols = T.shape[1]

    T = T.astype(float)
    b = b.astype(float)
    for _ in range(max_iter):
        cb = cvec[basis]
        z = cb @ T
        red = cvec - z
        enter = -1
        for j in range(n_cols):  # Bland: first improving column
            if red[j] > 1e-9:
                enter = j
                break
        if enter < 0:
            break
        ratios = np.full(m, np.inf)
        for i in range(m):
            if T[i, enter] > 1e-11:
                ratios[i] = b[i] / T[i, enter]
        leave = -1
        best = np.inf
        for i in range(m):
            if ratios[i] < best - 1e-12 or (
                ratios[i] <= best + 1e-12 and (leave < 0 or basis[i] < basis[leave])
            ):
                if ratios[i] < np.inf:
                    best = ratios[i]
                    leave = i
        if leave < 0:
            return "unbounded", None, None
        piv = T[leave, enter]
        T[leave] /= piv
        b[leave] /= piv
        for i in range(m):
            if i != leave and T[i, enter] != 0.0:
                b[i] -= T[i, enter] * b[leave]
                T[i] -= T[i, enter] * T[leave]
        basis[leave] = enter
    else:
        raise RuntimeError("tableau oracle iteration limit")

    y = np.zeros(n_cols)
    for i in range(m):
        y[basis[i]] = b[i]
    if np.any(y[art_start:] > 1e-5):
        return "infeasible", None, None
    x = y[:n] - y[n : 2 * n]
    val = float(np.asarray(c) @ x)
    return "optimal", val, x


def brute_force_binary_milp(sense, c, constraints, n_binary, continuous=None):
    """Enumerate all binary assignments; optional trailing continuous part
    is not supported here (pure-binary instances only)."""
    assert continuous is None
    c = np.asarray(c, dtype=float)
    best_v = None
    best_x = None
    feasible = []
    for bits in itertools.product((0.0, 1.0), repeat=n_binary):
        x = np.array(bits)
        ok = True
        for a, rel, rhs in constraints:
            v = float(np.asarray(a) @ x)
            if rel == "<=" and v > rhs + 1e-9:
                ok = False
            elif rel == ">=" and v < rhs - 1e-9:
                ok = False
            elif rel == "=" and abs(v - rhs) > 1e-9:
                ok = False
            if not ok:
                break
        if not ok:
            continue
        feasible.append(tuple(int(b) for b in bits))
        v = float(c @ x)
        if best_v is None or (v > best_v if sense == "max" else v < best_v):
            best_v = v
            best_x = x
    return best_v, best_x, feasible


# ---------------------------------------------------------------------------
# Network helpers
# ---------------------------------------------------------------------------


def random_network(rng, widths, output_activation="identity", scale=1.0, bias_scale=None):
    """Dense random net with the given architecture [n0, ..., n_{L+1}]."""
    from reluforge.network import Layer, Network

    if bias_scale is None:
        bias_scale = scale
    layers = []
    for k in range(1, len(widths)):
        w = rng.normal(0.0, scale, size=(widths[k], widths[k - 1]))
        b = rng.normal(0.0, bias_scale, size=widths[k])
        act = "relu"
        if k == len(widths) - 1:
            act = output_activation
        layers.append(Layer(w, b, act))
    return Network(tuple(layers), widths[0])


def naive_forward(net, x):
    """Re-derived forward pass (loops, no shared code path)."""
    h = [float(v) for v in x]
    for k, layer in enumerate(net.layers):
        out = []
        for i in range(layer.out_dim):
            s = float(layer.bias[i])
            for j in range(layer.in_dim):
                s += float(layer.weights[i, j]) * h[j]
            out.append(s)
        last = k == len(net.layers) - 1
        if not last or layer.activation == "relu":
            out = [max(0.0, v) for v in out]
        h = out
    return np.array(h)


def grid_max_preactivation(net, domain, layer, unit, resolution):
    """Max pre-activation of one hidden unit over a regular input grid.

    layer/unit are 1-based. Only for tiny input dims.
    """
    axes = [
        np.linspace(domain.lower[i], domain.upper[i], resolution)
        for i in range(domain.dim)
    ]
    mesh = np.meshgrid(*axes, indexing="ij")
    X = np.stack([m.ravel() for m in mesh], axis=1)
    h = X
    for k, lyr in enumerate(net.layers[:-1], start=1):
        g = h @ lyr.weights.T + lyr.bias
        if k == layer:
            col = g[:, unit - 1]
            return float(np.max(col)), float(np.max(-col))
        h = np.maximum(g, 0.0)
    raise ValueError("unit is not in a hidden layer")


def bias_forced_net(rng, widths, domain, p_inactive=0.25, p_active=0.25,
                    margin=0.5, folds_per_layer=0, scale=1.0):
    """Random net with biases shifted so chosen units are provably stable.

    Interval arithmetic picks the shift, so forcing is sound regardless of
    what earlier layers do. Returns (net, forced) with forced mapping
    (layer, unit) -> "stably-active" | "stably-inactive" for shifted units.
    Optionally rewrites rows of forced-active units to be linear
    combinations of earlier forced-active rows, forcing fold opportunities.
    """
    from reluforge.network import Layer, Network

    lo = np.asarray(domain.lower, dtype=float)
    hi = np.asarray(domain.upper, dtype=float)
    forced = {}
    layers = []
    for l in range(1, len(widths) - 1):
        n_out, n_in = widths[l], widths[l - 1]
        W = rng.normal(0.0, scale, size=(n_out, n_in))
        roles = []
        for i in range(n_out):
            u = rng.random()
            if u < p_inactive:
                roles.append("stably-inactive")
            elif u < p_inactive + p_active:
                roles.append("stably-active")
            else:
                roles.append(None)
        active_rows = [i for i, role in enumerate(roles) if role == "stably-active"]
        for _ in range(folds_per_layer):
            if len(active_rows) < 2:
                break
            tgt = active_rows[-1]
            basis = active_rows[:-1]
            coef = rng.normal(0.0, 1.0, size=len(basis))
            W[tgt] = coef @ W[basis]
            active_rows = active_rows[:-1]
        b = rng.normal(0.0, scale, size=n_out)
        pos = np.maximum(W, 0.0)
        neg = np.minimum(W, 0.0)
        g_hi_nob = pos @ hi + neg @ lo
        g_lo_nob = pos @ lo + neg @ hi
        for i, role in enumerate(roles):
            if role == "stably-inactive":
                b[i] = -g_hi_nob[i] - margin
                forced[(l, i + 1)] = role
            elif role == "stably-active":
                b[i] = -g_lo_nob[i] + margin
                forced[(l, i + 1)] = role
        layers.append(Layer(W, b, "relu"))
        g_lo = g_lo_nob + b
        g_hi = g_hi_nob + b
        lo = np.maximum(g_lo, 0.0)
        hi = np.maximum(g_hi, 0.0)
    W = rng.normal(0.0, scale, size=(widths[-1], widths[-2]))
    b = rng.normal(0.0, scale, size=widths[-1])
    layers.append(Layer(W, b, "identity"))
    return Network(tuple(layers), widths[0]), forced


def ball_sample(rng, x, epsilon, norm, n):
    """n random points within the epsilon-ball around x (linf or l2)."""
    x = np.asarray(x, dtype=np.float64)
    d = x.shape[0]
    if norm == "linf":
        return x + rng.uniform(-epsilon, epsilon, size=(n, d))
    v = rng.normal(size=(n, d))
    v /= np.linalg.norm(v, axis=1, keepdims=True)
    r = epsilon * rng.random(n) ** (1.0 / d)
    return x + v * r[:, None]


def same_pattern_on_ball(net, x, epsilon, norm, rng, n=1000):
    """Sampling check: do all ball points share x's activation pattern?"""
    from reluforge import forward, forward_batch

    x = np.asarray(x, dtype=np.float64)
    _, p0 = forward(net, x)
    _, bools = forward_batch(net, ball_sample(rng, x, epsilon, norm, n))
    for s, mat, width in zip(p0.sets, bools, net.hidden_widths):
        ref = np.zeros(width, dtype=bool)
        for i in s:
            ref[i - 1] = True
        if not np.all(mat == ref):
            return False
    return True
