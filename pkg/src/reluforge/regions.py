"""Feasible activation-pattern (linear-region) enumeration over a box domain.

The main enumerator runs one branch-and-bound tree: maximize a robustness
variable f that every active unit's activation must dominate, decode each
integral incumbent into a pattern, and exclude it with a lazy no-good cut.
When the tree finally goes infeasible, every pattern with a nonempty
interior (activations >= 1e-9 on the active side) has been seen exactly
once. Grid and exhaustive-LP oracles cross-check the result on small nets.
"""

from __future__ import annotations

import json
import math
import time
from dataclasses import dataclass, field

import numpy as np

from .exceptions import (
    DimensionMismatchError,
    IncompletePatternsError,
    ParseError,
    SizeLimitError,
)
from .network import (
    ActivationPattern,
    BoxDomain,
    fingerprint,
    forward_batch,
    region_preactivation_maps,
)
from .opt import (
    AbortSearch,
    LinearConstraint,
    LpBuilder,
    LpProblem,
    MilpConfig,
    lp_feasible,
    solve_milp,
)
from .stability import STABLY_ACTIVE, STABLY_INACTIVE, TINY_BIG_M, _encode_hidden_layers

# active side of a region keeps this much slack, so patterns reachable only
# on measure-zero boundaries are excluded by construction
INTERIOR_SLACK = 1e-9

PATTERNS_FORMAT = "pattern-set"
PATTERNS_VERSION = 1


@dataclass(frozen=True)
class PatternSet:
    """Set of feasible activation patterns of one network over one domain."""

    patterns: frozenset
    complete: bool
    widths: tuple
    method: str
    net_fingerprint: str
    stats: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.patterns)

    def __contains__(self, pattern):
        return pattern in self.patterns

    def __iter__(self):
        return iter(self.patterns)

    def sorted_patterns(self):
        return sorted(self.patterns, key=lambda p: p.sets)

    def require_complete(self):
        if not self.complete:
            raise IncompletePatternsError(
                "pattern set is incomplete (enumeration hit a limit)"
            )

    def to_jsonl(self):
        header = {
            "format": PATTERNS_FORMAT,
            "version": PATTERNS_VERSION,
            "widths": list(self.widths),
            "complete": self.complete,
            "method": self.method,
            "count": len(self.patterns),
            "fingerprint": self.net_fingerprint,
        }
        lines = [json.dumps(header)]
        lines.extend(
            json.dumps(s)
            for s in sorted(p.to_bitstrings(self.widths) for p in self.patterns)
        )
        return "\n".join(lines) + "\n"

    @classmethod
    def from_jsonl(cls, text):
        lines = [ln for ln in text.splitlines() if ln.strip()]
        if not lines:
            raise ParseError("empty pattern-set document")
        try:
            header = json.loads(lines[0])
        except json.JSONDecodeError as exc:
            raise ParseError(f"invalid JSON header: {exc}") from exc
        if not isinstance(header, dict) or header.get("format") != PATTERNS_FORMAT:
            raise ParseError("not a pattern-set document")
        if header.get("version") != PATTERNS_VERSION:
            raise ParseError(f"unsupported pattern-set version {header.get('version')!r}")
        try:
            widths = tuple(int(w) for w in header["widths"])
            pats = set()
            for ln in lines[1:]:
                bits = json.loads(ln)
                if not isinstance(bits, str):
                    raise ParseError("pattern line is not a string")
                parts = bits.split("|") if bits else []
                if tuple(len(p) for p in parts) != widths:
                    raise ParseError(f"pattern {bits!r} does not fit widths {widths}")
                pats.add(ActivationPattern.from_bitstrings(bits))
            if len(pats) != int(header["count"]):
                raise ParseError("pattern count does not match header")
            return cls(
                patterns=frozenset(pats),
                complete=bool(header["complete"]),
                widths=widths,
                method=str(header["method"]),
                net_fingerprint=str(header["fingerprint"]),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise ParseError(f"malformed pattern-set document: {exc}") from exc


def save_patterns_file(ps, path):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(ps.to_jsonl())


def load_patterns_file(path):
    with open(path, "r", encoding="utf-8") as fh:
        return PatternSet.from_jsonl(fh.read())


@dataclass(frozen=True)
class PrefixSets:
    """Per depth l, the distinct pattern prefixes (S_1, ..., S_l)."""

    by_layer: dict  # l -> frozenset of prefix tuples; l = 1..L

    def size(self, layer):
        if layer == 0:
            return 1  # the empty prefix
        return len(self.by_layer[layer])

    def sizes(self):
        out = {0: 1}
        out.update({l: len(s) for l, s in sorted(self.by_layer.items())})
        return out


def prefix_sets(ps):
    """Truncations of every pattern in ps to each depth."""
    if not ps.patterns:
        raise IncompletePatternsError("cannot take prefixes of an empty pattern set")
    n_layers = len(ps.widths)
    by_layer = {}
    for l in range(1, n_layers + 1):
        by_layer[l] = frozenset(p.sets[:l] for p in ps.patterns)
    return PrefixSets(by_layer=by_layer)


def zaslavsky_bound(n_inputs, n_hyperplanes):
    """Max number of regions n_hyperplanes hyperplanes cut R^n_inputs into."""
    return sum(math.comb(n_hyperplanes, s) for s in range(n_inputs + 1))


def region_constraints(net, domain, pattern, interior_slack=INTERIOR_SLACK):
    """Linear rows over x that carve pattern's region out of the domain box.

    Active units constrain g >= interior_slack, inactive ones g <= 0. The
    box itself is expressed through variable bounds, not rows.
    """
    maps = region_preactivation_maps(net, pattern)
    rows = []
    for l, (G, d) in enumerate(maps, start=1):
        active = set(pattern.sets[l - 1])
        for i in range(1, G.shape[0] + 1):
            a = G[i - 1]
            rhs = float(d[i - 1])
            if i in active:
                rows.append(LinearConstraint(-a, "<=", rhs - interior_slack))
            else:
                rows.append(LinearConstraint(a, "<=", -rhs))
    return rows


def _region_lp(net, domain, rows):
    n = net.input_dim
    return LpProblem("max", np.zeros(n), rows, domain.lower, domain.upper)


def enumerate_patterns(net, domain, report, max_patterns=None, time_limit=None):
    """All activation patterns with nonempty region interiors, via one tree.

    report must come from classify_units on the same network and domain; its
    bounds become the big-M constants and its stable units are hard-fixed in
    every emitted pattern. complete=True iff the search exhausted the tree
    within the limits.
    """
    report.validate_for(net, domain)
    table = report.bounds_table()
    tol = report.stability_tol
    L = net.num_hidden_layers
    widths = net.hidden_widths

    b = LpBuilder()
    _, units = _encode_hidden_layers(b, net, domain, table, L, tol)

    f_ub = 1.0
    for cls, cols in units.values():
        if cls != STABLY_INACTIVE:
            f_ub = max(f_ub, cols.get("H", 0.0))
    f = b.add_var("f", INTERIOR_SLACK, f_ub)
    z_cols = {}
    for key, (cls, cols) in units.items():
        if cls == STABLY_ACTIVE:
            b.add_constraint({f: 1.0, cols["g"]: -1.0}, "<=", 0.0)
        elif cls != STABLY_INACTIVE:
            Hp = cols["H"]
            b.add_constraint({f: 1.0, cols["h"]: -1.0, cols["z"]: Hp}, "<=", Hp)
            z_cols[key] = cols["z"]
    b.set_objective("max", {f: 1.0})
    milp = b.build_milp()

    always_active = {k for k, (cls, _) in units.items() if cls == STABLY_ACTIVE}
    found = []
    seen = set()
    t0 = time.perf_counter()

    def decode(x):
        sets = []
        for l in range(1, L + 1):
            active = [i for (ll, i) in always_active if ll == l]
            active += [
                i for (ll, i), col in z_cols.items() if ll == l and x[col] > 0.5
            ]
            sets.append(tuple(sorted(active)))
        return ActivationPattern(tuple(sets))

    def exclude(x, sol_obj):
        pattern = decode(x)
        if pattern not in seen:
            seen.add(pattern)
            found.append(pattern)
        if max_patterns is not None and len(found) >= max_patterns:
            raise AbortSearch("pattern limit reached")
        coeffs = np.zeros(milp.base.n_vars)
        ones = 0
        for col in z_cols.values():
            if x[col] > 0.5:
                coeffs[col] = 1.0
                ones += 1
            else:
                coeffs[col] = -1.0
        return [LinearConstraint(coeffs, "<=", float(ones - 1))]

    sol = solve_milp(
        milp, MilpConfig(time_limit=time_limit), lazy_cut_hook=exclude
    )
    complete = sol.status == "infeasible"
    stats = {
        "status": sol.status,
        "incumbents": len(found),
        "nodes": sol.stats.get("nodes", 0),
        "lp_solves": sol.stats.get("lp_solves", 0),
        "cuts": sol.stats.get("cuts", 0),
        "time_ms": (time.perf_counter() - t0) * 1000.0,
    }
    return PatternSet(
        patterns=frozenset(found),
        complete=complete,
        widths=widths,
        method="one-tree",
        net_fingerprint=fingerprint(net),
        stats=stats,
    )


def brute_force_patterns(net, domain, resolution=400):
    """Patterns seen on a regular input grid. Never claims completeness."""
    if domain.dim != net.input_dim:
        raise DimensionMismatchError("domain dimension does not match network input")
    if net.input_dim > 3:
        raise SizeLimitError("grid enumeration supports at most 3 input dimensions")
    axes = [
        np.linspace(domain.lower[i], domain.upper[i], resolution)
        for i in range(domain.dim)
    ]
    mesh = np.meshgrid(*axes, indexing="ij")
    X = np.stack([m.ravel() for m in mesh], axis=1)
    t0 = time.perf_counter()
    _, layer_bools = forward_batch(net, X)
    packed = np.concatenate(layer_bools, axis=1)
    widths = net.hidden_widths
    uniq = np.unique(packed, axis=0)
    pats = set()
    for row in uniq:
        sets = []
        start = 0
        for w in widths:
            chunk = row[start : start + w]
            sets.append(tuple(int(i) + 1 for i in np.flatnonzero(chunk)))
            start += w
        pats.add(ActivationPattern(tuple(sets)))
    return PatternSet(
        patterns=frozenset(pats),
        complete=False,
        widths=widths,
        method="grid",
        net_fingerprint=fingerprint(net),
        stats={
            "resolution": resolution,
            "points": X.shape[0],
            "time_ms": (time.perf_counter() - t0) * 1000.0,
        },
    )


def exhaustive_lp_patterns(net, domain):
    """Exact feasible-pattern set by depth-first sign enumeration with LP pruning.

    Walks units in layer order; at each unit both sign choices are tested
    for polytope feasibility (active side keeps the interior slack), and
    infeasible prefixes prune their whole subtree. Exponential worst case,
    intended as an oracle for small nets.
    """
    if domain.dim != net.input_dim:
        raise DimensionMismatchError("domain dimension does not match network input")
    if net.total_hidden_units > 16:
        raise SizeLimitError("exhaustive enumeration supports at most 16 hidden units")
    widths = net.hidden_widths
    L = net.num_hidden_layers
    t0 = time.perf_counter()
    lp_count = 0
    pats = []

    def feasible(rows):
        nonlocal lp_count
        lp_count += 1
        ok, _ = lp_feasible(_region_lp(net, domain, rows))
        return ok

    def walk(layer, unit, rows, A, c, mask, sets):
        # A x + c = pre-activations of the current layer given earlier masks
        nonlocal pats
        if layer > L:
            pats.append(ActivationPattern(tuple(sets)))
            return
        a = A[unit - 1]
        rhs = float(c[unit - 1])
        w = widths[layer - 1]

        def descend(new_rows, new_mask):
            if unit == w:
                # layer complete: push the masked affine map through
                lay_next = net.layers[layer]
                masked = A * np.asarray(new_mask)[:, None]
                mc = c * np.asarray(new_mask)
                A2 = lay_next.weights @ masked
                c2 = lay_next.weights @ mc + lay_next.bias
                walk(
                    layer + 1, 1, new_rows, A2, c2, [],
                    sets + [tuple(i for i, m in enumerate(new_mask, 1) if m)],
                )
            else:
                walk(layer, unit + 1, new_rows, A, c, new_mask, sets)

        inactive = rows + [LinearConstraint(a, "<=", -rhs)]
        if feasible(inactive):
            descend(inactive, mask + [0.0])
        active = rows + [LinearConstraint(-a, "<=", rhs - INTERIOR_SLACK)]
        if feasible(active):
            descend(active, mask + [1.0])

    first = net.layers[0]
    walk(1, 1, [], first.weights.copy(), first.bias.copy(), [], [])
    return PatternSet(
        patterns=frozenset(pats),
        complete=True,
        widths=widths,
        method="exhaustive-lp",
        net_fingerprint=fingerprint(net),
        stats={
            "lp_solves": lp_count,
            "time_ms": (time.perf_counter() - t0) * 1000.0,
        },
    )
