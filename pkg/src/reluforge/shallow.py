"""Two-hidden-layer rewrites with certified agreement on region interiors.

A deep ReLU net is piecewise linear; on the interior of each linear region
it coincides with a single affine map. The rewrite materializes one
candidate copy of the last hidden layer per activation-pattern prefix and
adds penalty units that force every copy built for the wrong prefix to
exactly zero, so the output sum reproduces the original function at any
point epsilon-deep inside its region. `shallow_full` instantiates all
2^(n_1+...+n_{L-1}) prefixes; `shallow_patterns` only the prefixes of a
complete feasible-pattern enumeration, which is usually far smaller.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .exceptions import (
    DeltaUnderflowError,
    DimensionMismatchError,
    ReportMismatchError,
    SizeLimitError,
)
from .network import (
    BoxDomain,
    Layer,
    Network,
    fingerprint,
    forward,
    preactivation_intervals,
    region_preactivation_maps,
)
from .opt import LpBuilder, lp_feasible, solve_lp
from .regions import prefix_sets

NORMS = ("linf", "l2")
STRATEGIES = ("auto", "conservative-interval", "lp-min-violation", "user-supplied")

# auto strategy switches to the interval bound above this many hidden units
LP_STRATEGY_LIMIT = 12

DELTA_FLOOR = 1e-12
FULL_UNIT_LIMIT = 20
EMIT_WIDTH_LIMIT = 500_000


@dataclass(frozen=True)
class ShallowConfig:
    """Rewrite parameters.

    epsilon is the interiority distance, norm the ball norm it is measured
    in. H_strategy picks how the penalty constant is obtained; "auto"
    solves the violation programs exactly on small nets and falls back to
    the interval bound on larger ones. A user-supplied H skips both.
    """

    epsilon: float
    norm: str = "linf"
    H_strategy: str = "auto"
    H: float | None = None

    def __post_init__(self):
        eps = float(self.epsilon)
        if not np.isfinite(eps) or eps <= 0.0:
            raise DimensionMismatchError("epsilon must be a positive finite float")
        if self.norm not in NORMS:
            raise DimensionMismatchError(f"unknown norm {self.norm!r}")
        if self.H_strategy not in STRATEGIES:
            raise DimensionMismatchError(f"unknown H strategy {self.H_strategy!r}")
        if self.H_strategy == "user-supplied":
            if self.H is None or not np.isfinite(self.H) or self.H <= 0.0:
                raise DimensionMismatchError("user-supplied H must be positive")
        object.__setattr__(self, "epsilon", eps)


# ---------------------------------------------------------------------------
# width formulas (exact integers; these overflow 64 bits quickly)
# ---------------------------------------------------------------------------


def widths_full(arch):
    """First/second hidden widths of the all-prefix rewrite of arch.

    arch lists n_0..n_{L+1}. Counting both value and complement units, the
    layer-l group holds 2^(n_1+...+n_{l-1}) * 2*n_l units for l < L, the
    last group 2^(n_1+...+n_{L-1}) * n_L, and the second layer one unit per
    (prefix, output) pair.
    """
    arch = [int(a) for a in arch]
    if len(arch) < 3:
        raise DimensionMismatchError("need at least one hidden layer")
    hidden = arch[1:-1]
    n_out = arch[-1]
    big_l = len(hidden)
    n1 = 0
    for l in range(1, big_l):
        n1 += (1 << sum(hidden[: l - 1])) * 2 * hidden[l - 1]
    prefixes = 1 << sum(hidden[: big_l - 1])
    n1 += prefixes * hidden[-1]
    return n1, prefixes * n_out


def widths_patterns(arch, prefix_counts):
    """Widths of the feasible-prefix rewrite.

    prefix_counts holds |A_0|..|A_{L-1}|, the number of distinct pattern
    prefixes at each depth; the leading entry is always 1 (empty prefix).
    """
    arch = [int(a) for a in arch]
    counts = [int(c) for c in prefix_counts]
    if len(arch) < 3:
        raise DimensionMismatchError("need at least one hidden layer")
    hidden = arch[1:-1]
    if len(counts) != len(hidden):
        raise DimensionMismatchError("prefix_counts must have one entry per hidden layer")
    if counts[0] != 1:
        raise DimensionMismatchError("the depth-0 prefix count is always 1")
    n1 = 0
    for l in range(1, len(hidden)):
        n1 += counts[l - 1] * 2 * hidden[l - 1]
    n1 += counts[-1] * hidden[-1]
    return n1, counts[-1] * arch[-1]


# ---------------------------------------------------------------------------
# prefix machinery
# ---------------------------------------------------------------------------


def _prefix_key(prefix, widths):
    # concatenated bitstring; fixed widths make string order lexicographic
    parts = []
    for s, w in zip(prefix, widths):
        active = set(s)
        parts.append("".join("1" if i + 1 in active else "0" for i in range(w)))
    return "".join(parts)


def _all_prefixes(hidden_widths, length):
    """Every (S_1..S_length) combination, sorted by bitstring."""
    per_layer = []
    for l in range(length):
        n = hidden_widths[l]
        subsets = [
            tuple(i + 1 for i, bit in enumerate(bits) if bit)
            for bits in itertools.product((0, 1), repeat=n)
        ]
        per_layer.append(subsets)
    return [tuple(p) for p in itertools.product(*per_layer)]


def _prefix_map(net, prefix):
    """Affine map x -> pre-activations of hidden layer len(prefix)+1,
    assuming the given prefix fixed the earlier ReLUs."""
    A = net.layers[0].weights
    c = net.layers[0].bias
    for depth, s in enumerate(prefix):
        mask = np.zeros(A.shape[0])
        for i in s:
            mask[i - 1] = 1.0
        nxt = net.layers[depth + 1]
        A = nxt.weights @ (A * mask[:, None])
        c = nxt.weights @ (c * mask) + nxt.bias
    return A, c


def _prefix_families(net, patterns):
    """Per depth 0..L-1, the sorted list of prefixes to instantiate."""
    big_l = net.num_hidden_layers
    widths = net.hidden_widths
    fams = {}
    if patterns is None:
        for depth in range(big_l):
            fams[depth] = _all_prefixes(widths, depth)
        return fams
    patterns.require_complete()
    if patterns.net_fingerprint != fingerprint(net):
        raise ReportMismatchError("pattern set was enumerated for a different network")
    pre = prefix_sets(patterns)
    fams[0] = [()]
    for depth in range(1, big_l):
        fams[depth] = sorted(pre.by_layer[depth], key=lambda q: _prefix_key(q, widths))
    return fams


def _dual_norm(row, norm):
    # dual of the ball norm: linf ball -> l1, l2 ball -> l2
    if norm == "linf":
        return float(np.sum(np.abs(row)))
    return float(np.sqrt(np.dot(row, row)))


def _output_shift(net, domain):
    """Per-output constant making the final pre-activation non-negative on
    the domain, so the outer max() of the second layer never clips it.
    ReLU-output nets already carry that max and need no shift."""
    if net.layers[-1].activation == "relu":
        return np.zeros(net.output_dim)
    lo, _ = preactivation_intervals(net, domain)[-1]
    return np.maximum(0.0, -lo)


# ---------------------------------------------------------------------------
# the penalty constant
# ---------------------------------------------------------------------------


def _conservative_H(net, domain, fams, config, shift):
    big_l = net.num_hidden_layers
    eps = config.epsilon
    cen = domain.center()
    rad = (domain.upper - domain.lower) / 2.0

    # smallest violation any wrongly-asserted unit can show on an
    # epsilon-interior point: eps times the dual norm of its row, or the
    # constant magnitude for degenerate zero rows
    delta = np.inf
    for depth in range(big_l):
        for q in fams[depth]:
            A, c = _prefix_map(net, q)
            for i in range(A.shape[0]):
                d = _dual_norm(A[i], config.norm)
                contrib = eps * d if d > 0.0 else abs(c[i])
                delta = min(delta, contrib)
    if not np.isfinite(delta) or delta <= DELTA_FLOOR:
        raise DeltaUnderflowError(
            f"violation lower bound {delta:.3e} is below {DELTA_FLOOR:.0e}; "
            "epsilon is too small for this net"
        )

    w_out = net.layers[-1].weights
    b_out = net.layers[-1].bias
    u = 0.0
    for q in fams[big_l - 1]:
        A, c = _prefix_map(net, q)
        gmax = A @ cen + np.abs(A) @ rad + c
        hmax = np.maximum(gmax, 0.0)
        cand = np.abs(w_out) @ hmax + np.abs(b_out) + shift
        u = max(u, float(np.max(cand)))
    return u / delta


def _interior_region_rows(net, q, config, builder):
    """Add the epsilon-shrunk region constraints of home prefix q over the
    x variables already present in builder."""
    n0 = net.input_dim
    for depth in range(len(q)):
        A, c = _prefix_map(net, q[:depth])
        active = set(q[depth])
        for i in range(A.shape[0]):
            margin = config.epsilon * _dual_norm(A[i], config.norm)
            coeffs = {k: A[i, k] for k in range(n0) if A[i, k] != 0.0}
            if i + 1 in active:
                builder.add_constraint(coeffs, ">=", margin - c[i])
            else:
                builder.add_constraint(coeffs, "<=", -margin - c[i])


def _home_feasible(net, domain, q, config):
    b = LpBuilder()
    for k in range(net.input_dim):
        b.add_var(f"x{k}", domain.lower[k], domain.upper[k])
    _interior_region_rows(net, q, config, b)
    b.set_objective("max", {})
    ok, _ = lp_feasible(b.build_lp())
    return ok


def _min_violation(net, domain, home, wrong, config):
    """Least total penalty mass a point epsilon-deep in home's region can
    produce against the wrong prefix. Epigraph LP: one t per penalty term."""
    b = LpBuilder()
    n0 = net.input_dim
    for k in range(n0):
        b.add_var(f"x{k}", domain.lower[k], domain.upper[k])
    _interior_region_rows(net, home, config, b)
    t_idx = []
    for depth in range(len(wrong)):
        A, c = _prefix_map(net, wrong[:depth])
        active = set(wrong[depth])
        for i in range(A.shape[0]):
            t = b.add_var(f"t{depth}_{i}", 0.0)
            t_idx.append(t)
            coeffs = {k: A[i, k] for k in range(n0) if A[i, k] != 0.0}
            if i + 1 in active:
                # term is the complement value max(0, -g): t >= -g
                coeffs[t] = 1.0
                b.add_constraint(coeffs, ">=", -c[i])
            else:
                coeffs = {k: -v for k, v in coeffs.items()}
                coeffs[t] = 1.0
                b.add_constraint(coeffs, ">=", c[i])
    b.set_objective("min", {t: 1.0 for t in t_idx})
    sol = solve_lp(b.build_lp())
    if sol.status != "optimal":
        return None
    return float(sol.objective)


def _max_numerator(net, domain, home, wrong, config, shift):
    """Upper bound on the unpenalized second-layer input of the wrong
    prefix's group over home's epsilon-interior, from per-unit range LPs."""
    n0 = net.input_dim
    A, c = _prefix_map(net, wrong)

    def extremum(i, sense):
        b = LpBuilder()
        for k in range(n0):
            b.add_var(f"x{k}", domain.lower[k], domain.upper[k])
        _interior_region_rows(net, home, config, b)
        b.set_objective(sense, {k: A[i, k] for k in range(n0) if A[i, k] != 0.0})
        sol = solve_lp(b.build_lp())
        if sol.status != "optimal":
            return None
        return float(sol.objective) + c[i]

    hmax = np.zeros(A.shape[0])
    hmin = np.zeros(A.shape[0])
    for i in range(A.shape[0]):
        top = extremum(i, "max")
        bot = extremum(i, "min")
        if top is None or bot is None:
            return None
        hmax[i] = max(0.0, top)
        hmin[i] = max(0.0, bot)
    w_out = net.layers[-1].weights
    b_out = net.layers[-1].bias
    best = np.maximum(w_out, 0.0) @ hmax + np.minimum(w_out, 0.0) @ hmin
    return float(np.max(best + b_out + shift))


def _lp_H(net, domain, fams, config, shift):
    big_l = net.num_hidden_layers
    family = fams[big_l - 1]
    homes = [q for q in family if _home_feasible(net, domain, q, config)]
    best = 0.0
    for home in homes:
        for wrong in family:
            if wrong == home:
                continue
            v = _min_violation(net, domain, home, wrong, config)
            if v is None:
                continue
            if v <= DELTA_FLOOR:
                raise DeltaUnderflowError(
                    f"violation minimum {v:.3e} is below {DELTA_FLOOR:.0e}; "
                    "epsilon is too small for this net"
                )
            u = _max_numerator(net, domain, home, wrong, config, shift)
            if u is None or u <= 0.0:
                continue
            best = max(best, u / v)
    return best


def compute_big_H(net, domain, config, patterns=None):
    """Penalty weight used by the rewrite's second layer.

    Any point epsilon-deep inside a region produces, against every wrong
    prefix, enough penalty mass that -H times it dominates the group's
    value input, zeroing the unit. patterns=None sizes the bound for the
    all-prefix rewrite; a complete PatternSet restricts it to feasible
    prefixes.
    """
    if config.H_strategy == "user-supplied":
        return float(config.H)
    strategy = config.H_strategy
    if strategy == "auto":
        strategy = (
            "lp-min-violation"
            if net.total_hidden_units <= LP_STRATEGY_LIMIT
            else "conservative-interval"
        )
    fams = _prefix_families(net, patterns)
    shift = _output_shift(net, domain)
    if strategy == "conservative-interval":
        return _conservative_H(net, domain, fams, config, shift)
    return _lp_H(net, domain, fams, config, shift)


# ---------------------------------------------------------------------------
# construction
# ---------------------------------------------------------------------------


def _build_rewrite(net, domain, fams, config, big_h, label):
    big_l = net.num_hidden_layers
    n0 = net.input_dim
    out_dim = net.output_dim
    w_out = net.layers[-1].weights
    b_out = net.layers[-1].bias
    shift = _output_shift(net, domain)

    rows = []
    biases = []
    pos_h = {}
    pos_hbar = {}
    for l in range(1, big_l):
        for q in fams[l - 1]:
            A, c = _prefix_map(net, q)
            for i in range(1, A.shape[0] + 1):
                pos_h[(l, q, i)] = len(rows)
                rows.append(A[i - 1])
                biases.append(c[i - 1])
                pos_hbar[(l, q, i)] = len(rows)
                rows.append(-A[i - 1])
                biases.append(-c[i - 1])
    last = fams[big_l - 1]
    for q in last:
        A, c = _prefix_map(net, q)
        for i in range(1, A.shape[0] + 1):
            pos_h[(big_l, q, i)] = len(rows)
            rows.append(A[i - 1])
            biases.append(c[i - 1])

    n1p = len(rows)
    n2p = len(last) * out_dim
    if n1p + n2p > EMIT_WIDTH_LIMIT:
        raise SizeLimitError(
            f"rewrite would emit {n1p + n2p} hidden units (limit {EMIT_WIDTH_LIMIT})"
        )
    w1 = np.array(rows)
    b1 = np.array(biases)

    w2 = np.zeros((n2p, n1p))
    b2 = np.zeros(n2p)
    w3 = np.zeros((out_dim, n2p))
    r = 0
    for q in last:
        for j in range(out_dim):
            for i in range(1, net.hidden_widths[-1] + 1):
                w2[r, pos_h[(big_l, q, i)]] += w_out[j, i - 1]
            for l in range(1, big_l):
                ql = q[: l - 1]
                active = set(q[l - 1])
                for s in range(1, net.hidden_widths[l - 1] + 1):
                    if s in active:
                        w2[r, pos_hbar[(l, ql, s)]] -= big_h
                    else:
                        w2[r, pos_h[(l, ql, s)]] -= big_h
            b2[r] = b_out[j] + shift[j]
            w3[j, r] = 1.0
            r += 1

    meta = {
        "construction": label,
        "epsilon": repr(config.epsilon),
        "norm": config.norm,
        "H": repr(float(big_h)),
        "source_fingerprint": fingerprint(net),
    }
    return Network(
        (
            Layer(w1, b1, "relu"),
            Layer(w2, b2, "relu"),
            Layer(w3, -shift, "identity"),
        ),
        n0,
        metadata=meta,
    )


def shallow_full(net, domain, config):
    """Rewrite net as 2 hidden layers instantiating every prefix.

    Agrees with net at every epsilon-interior point of the domain; widths
    equal widths_full(net.widths) exactly, which is why the input is capped
    at a small total unit count.
    """
    if domain.dim != net.input_dim:
        raise DimensionMismatchError("domain does not fit the network input")
    if net.total_hidden_units > FULL_UNIT_LIMIT:
        raise SizeLimitError(
            f"{net.total_hidden_units} hidden units; the all-prefix rewrite "
            f"is limited to {FULL_UNIT_LIMIT}"
        )
    fams = _prefix_families(net, None)
    big_h = compute_big_H(net, domain, config)
    out = _build_rewrite(net, domain, fams, config, big_h, "full")
    expect = widths_full(net.widths)
    got = (out.layers[0].out_dim, out.layers[1].out_dim)
    assert got == expect, (got, expect)
    return out


def shallow_patterns(net, domain, patterns, config):
    """Rewrite instantiating only the prefixes of a complete enumeration.

    Refuses incomplete pattern sets: a missing region would silence the
    output on that region instead of reproducing it.
    """
    if domain.dim != net.input_dim:
        raise DimensionMismatchError("domain does not fit the network input")
    fams = _prefix_families(net, patterns)
    big_h = compute_big_H(net, domain, config, patterns)
    out = _build_rewrite(net, domain, fams, config, big_h, "patterns")
    counts = [len(fams[d]) for d in range(net.num_hidden_layers)]
    expect = widths_patterns(net.widths, counts)
    got = (out.layers[0].out_dim, out.layers[1].out_dim)
    assert got == expect, (got, expect)
    return out


# ---------------------------------------------------------------------------
# interiority
# ---------------------------------------------------------------------------


def is_interior(net, x, epsilon, norm="linf"):
    """Is every point within epsilon of x certified to share x's pattern?

    Sufficient condition per unit: the pre-activation magnitude exceeds
    epsilon times the dual norm of the unit's effective gradient row in
    x's region. Conservative; boundary points (any exact zero) fail.
    """
    if norm not in NORMS:
        raise DimensionMismatchError(f"unknown norm {norm!r}")
    x = np.asarray(x, dtype=np.float64)
    _, pattern = forward(net, x)
    for (A, c), s in zip(region_preactivation_maps(net, pattern), pattern.sets):
        g = A @ x + c
        active = set(s)
        for i in range(A.shape[0]):
            if g[i] == 0.0:
                return False
            margin = float(epsilon) * _dual_norm(A[i], norm)
            if i + 1 in active:
                if not g[i] > margin:
                    return False
            elif not g[i] <= -margin:
                return False
    return True
