"""Per-unit pre-activation bounds and activation-stability classification.

For a hidden unit with pre-activation g over a box domain D, H = max_D g and
H_bar = max_D (-g). The unit is stably inactive when H <= tol, stably active
when H_bar <= tol, and unstable otherwise. Bounds are computed layer by layer:
each layer's MILP encoding uses the previous layers' bounds as big-M
constants, with stably-fixed units elided from the encoding.
"""

from __future__ import annotations

import json
import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from datetime import datetime, timezone

import numpy as np

from .exceptions import (
    DimensionMismatchError,
    MissingBoundsError,
    NumericsError,
    ParseError,
    ReportMismatchError,
)
from .network import BoxDomain, fingerprint, preactivation_intervals
from .opt import LpBuilder, LpProblem, MilpConfig, MilpProblem, solve_lp, solve_milp

STABLY_ACTIVE = "stably-active"
STABLY_INACTIVE = "stably-inactive"
UNSTABLE = "unstable"

MODES = ("exact", "feasibility-first", "relaxed-only")

# big-M rows stay well-posed even if a caller feeds a bound that is <= 0
TINY_BIG_M = 1e-6

REPORT_FORMAT = "stability-report"
REPORT_VERSION = 1


@dataclass(frozen=True)
class UnitBounds:
    """H = max pre-activation, H_bar = max negated pre-activation over D.

    provenance: 'exact' (both values are true optima), 'relaxed' (upper
    bounds from an LP relaxation or an interrupted search), or 'feasibility'
    (a feasible point crossed the threshold, value is the relaxed bound).
    Relaxed values only ever over-estimate, so classification stays sound:
    a unit reported stable really is stable.
    """

    H: float
    H_bar: float
    provenance: str = "exact"

    def classify(self, stability_tol=0.0):
        if self.H <= stability_tol:
            return STABLY_INACTIVE
        if self.H_bar <= stability_tol:
            return STABLY_ACTIVE
        return UNSTABLE


@dataclass(frozen=True)
class UnitEncoding:
    """MILP fragment for one target unit: maximize g_target over D."""

    problem: MilpProblem
    var_index: dict
    target: int


@dataclass(frozen=True)
class UnitRecord:
    layer: int
    index: int
    H: float
    H_bar: float
    classification: str
    provenance: str
    solve_ms: float

    def to_jsonable(self):
        return {
            "layer": self.layer,
            "index": self.index,
            "H": _enc_float(self.H),
            "H_bar": _enc_float(self.H_bar),
            "class": self.classification,
            "provenance": self.provenance,
            "solve_ms": self.solve_ms,
        }


def _enc_float(v):
    # strict JSON has no Infinity literal; inf can appear on hard time limits
    if math.isinf(v):
        return "inf" if v > 0 else "-inf"
    return float(v)


def _dec_float(v):
    if isinstance(v, str):
        if v == "inf":
            return math.inf
        if v == "-inf":
            return -math.inf
        raise ParseError(f"bad float token {v!r}")
    return float(v)


@dataclass
class StabilityReport:
    """Classification of every hidden unit of a network over one domain."""

    net_fingerprint: str
    domain: BoxDomain
    mode: str
    stability_tol: float
    units: dict  # (layer, index) -> UnitRecord
    stats: dict = field(default_factory=dict)
    created_at: str = ""

    def record(self, layer, index):
        return self.units[(layer, index)]

    def classes(self):
        return {k: r.classification for k, r in self.units.items()}

    def bounds_table(self):
        return {
            k: UnitBounds(r.H, r.H_bar, r.provenance) for k, r in self.units.items()
        }

    def counts(self):
        out = {STABLY_ACTIVE: 0, STABLY_INACTIVE: 0, UNSTABLE: 0}
        for r in self.units.values():
            out[r.classification] += 1
        return out

    def validate_for(self, net, domain=None):
        """Raise ReportMismatchError unless this report describes net (+domain)."""
        if fingerprint(net) != self.net_fingerprint:
            raise ReportMismatchError("report fingerprint does not match network")
        if domain is not None:
            same = np.array_equal(domain.lower, self.domain.lower) and np.array_equal(
                domain.upper, self.domain.upper
            )
            if not same:
                raise ReportMismatchError("report domain does not match")

    def to_jsonable(self):
        recs = [self.units[k].to_jsonable() for k in sorted(self.units)]
        return {
            "format": REPORT_FORMAT,
            "version": REPORT_VERSION,
            "fingerprint": self.net_fingerprint,
            "domain": self.domain.to_jsonable(),
            "mode": self.mode,
            "stability_tol": self.stability_tol,
            "created_at": self.created_at,
            "stats": self.stats,
            "units": recs,
        }

    def to_json(self, indent=1):
        return json.dumps(self.to_jsonable(), indent=indent, allow_nan=False)

    @classmethod
    def from_jsonable(cls, doc):
        if not isinstance(doc, dict) or doc.get("format") != REPORT_FORMAT:
            raise ParseError("not a stability report document")
        if doc.get("version") != REPORT_VERSION:
            raise ParseError(f"unsupported report version {doc.get('version')!r}")
        try:
            units = {}
            for rec in doc["units"]:
                r = UnitRecord(
                    layer=int(rec["layer"]),
                    index=int(rec["index"]),
                    H=_dec_float(rec["H"]),
                    H_bar=_dec_float(rec["H_bar"]),
                    classification=str(rec["class"]),
                    provenance=str(rec["provenance"]),
                    solve_ms=float(rec["solve_ms"]),
                )
                units[(r.layer, r.index)] = r
            return cls(
                net_fingerprint=str(doc["fingerprint"]),
                domain=BoxDomain.from_jsonable(doc["domain"]),
                mode=str(doc["mode"]),
                stability_tol=float(doc["stability_tol"]),
                units=units,
                stats=dict(doc.get("stats", {})),
                created_at=str(doc.get("created_at", "")),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise ParseError(f"malformed stability report: {exc}") from exc

    @classmethod
    def from_json(cls, text):
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ParseError(f"invalid JSON: {exc}") from exc
        return cls.from_jsonable(doc)


def _affine_row(g_col, weights, prev_acts):
    # g - sum_k w_k * act_k = bias, with elided (None) activations dropped
    row = {g_col: 1.0}
    for k, col in enumerate(prev_acts):
        wk = float(weights[k])
        if col is None or wk == 0.0:
            continue
        row[col] = row.get(col, 0.0) - wk
    return row


def _encode_hidden_layers(b, net, domain, bounds_so_far, n_layers, stability_tol):
    """Encode hidden layers 1..n_layers of the relu stack into builder b.

    Per unit: stably-inactive units vanish (activation identically 0),
    stably-active units keep a single pre-activation variable (activation
    equals it, binary pinned to 1 by elision), unstable units get the full
    relu split g = h - h_bar with an indicator binary and big-M rows
    h <= H z, h_bar <= H_bar (1 - z).

    Returns (acts, units): activation column handles of layer n_layers (None
    where elided) and a map (layer, index) -> (class, column dict).
    """
    acts = [
        b.add_var(f"x{k+1}", float(domain.lower[k]), float(domain.upper[k]))
        for k in range(net.input_dim)
    ]
    units = {}
    for l in range(1, n_layers + 1):
        lay = net.layers[l - 1]
        nxt = []
        for i in range(1, lay.out_dim + 1):
            try:
                ub = bounds_so_far[(l, i)]
            except (KeyError, TypeError) as exc:
                raise MissingBoundsError(
                    f"no bounds for prior unit ({l},{i})"
                ) from exc
            cls = ub.classify(stability_tol)
            if cls == STABLY_INACTIVE:
                units[(l, i)] = (cls, {})
                nxt.append(None)
                continue
            w = lay.weights[i - 1]
            bias = float(lay.bias[i - 1])
            if cls == STABLY_ACTIVE:
                g = b.add_var(f"g{l}_{i}", max(0.0, -ub.H_bar), ub.H)
                b.add_constraint(_affine_row(g, w, acts), "=", bias)
                units[(l, i)] = (cls, {"g": g})
                nxt.append(g)
                continue
            Hp = max(ub.H, TINY_BIG_M)
            Hbp = max(ub.H_bar, TINY_BIG_M)
            g = b.add_var(f"g{l}_{i}", -Hbp, Hp)
            h = b.add_var(f"h{l}_{i}", 0.0, Hp)
            hbar = b.add_var(f"hbar{l}_{i}", 0.0, Hbp)
            z = b.add_var(f"z{l}_{i}", 0.0, 1.0, binary=True)
            b.add_constraint(_affine_row(g, w, acts), "=", bias)
            b.add_constraint({g: 1.0, h: -1.0, hbar: 1.0}, "=", 0.0)
            b.add_constraint({h: 1.0, z: -Hp}, "<=", 0.0)
            b.add_constraint({hbar: 1.0, z: Hbp}, "<=", Hbp)
            units[(l, i)] = (cls, {"g": g, "h": h, "hbar": hbar, "z": z, "H": Hp})
            nxt.append(h)
        acts = nxt
    return acts, units


def encode_unit_constraints(net, domain, bounds_so_far, up_to, stability_tol=0.0):
    """Build the MILP whose optimum over D is H for the unit at up_to.

    Prior layers are encoded from bounds_so_far (see _encode_hidden_layers).
    The target unit's g is left free with only its defining equality, ready
    for a max-g or max-(-g) objective. The returned problem's objective is
    max g.
    """
    layer, unit = up_to
    if domain.dim != net.input_dim:
        raise DimensionMismatchError("domain dimension does not match network input")
    if not 1 <= layer <= net.num_hidden_layers:
        raise DimensionMismatchError(f"layer {layer} is not a hidden layer")
    if not 1 <= unit <= net.layers[layer - 1].out_dim:
        raise DimensionMismatchError(f"unit {unit} out of range in layer {layer}")

    b = LpBuilder()
    acts, _ = _encode_hidden_layers(b, net, domain, bounds_so_far, layer - 1, stability_tol)

    lay = net.layers[layer - 1]
    w = lay.weights[unit - 1]
    bias = float(lay.bias[unit - 1])
    g = b.add_var(f"g{layer}_{unit}")
    h = b.add_var(f"h{layer}_{unit}", 0.0)
    hbar = b.add_var(f"hbar{layer}_{unit}", 0.0)
    b.add_constraint(_affine_row(g, w, acts), "=", bias)
    b.add_constraint({g: 1.0, h: -1.0, hbar: 1.0}, "=", 0.0)
    b.set_objective("max", {g: 1.0})
    return UnitEncoding(problem=b.build_milp(), var_index=b.names, target=g)


def _negated(problem):
    base = problem.base
    flipped = LpProblem("max", -base.objective, base.constraints, base.lower, base.upper)
    return MilpProblem(flipped, problem.binaries)


def _solve_side(problem, mode, time_limit, feas_threshold):
    """One bound (max of the problem's objective). Returns (value, provenance)."""
    if mode == "relaxed-only":
        sol = solve_lp(problem.base)
        if sol.status != "optimal":
            raise NumericsError(f"relaxation solve returned {sol.status}")
        return float(sol.objective), "relaxed"

    target = "optimal" if mode == "exact" else ("first-feasible-above", feas_threshold)
    sol = solve_milp(problem, MilpConfig(time_limit=time_limit, target=target))
    if sol.status == "optimal":
        return float(sol.objective), "exact"
    if sol.status == "feasible-found":
        relax = solve_lp(problem.base)
        if relax.status != "optimal":
            raise NumericsError(f"relaxation solve returned {relax.status}")
        return float(relax.objective), "feasibility"
    if sol.status == "time-limit":
        return float(sol.bound), "relaxed"
    raise NumericsError(f"bound solve returned unexpected status {sol.status}")


def unit_bounds(
    net,
    domain,
    layer,
    unit,
    bounds_so_far=None,
    mode="exact",
    stability_tol=0.0,
    time_limit=None,
    feas_threshold=0.0,
):
    """H and H_bar for one hidden unit.

    bounds_so_far may be omitted, in which case all prior layers are bounded
    first (same mode) purely to build this unit's encoding.
    """
    if mode not in MODES:
        raise DimensionMismatchError(f"unknown mode {mode!r}")
    if bounds_so_far is None:
        bounds_so_far = {}
        for l in range(1, layer):
            for i in range(1, net.layers[l - 1].out_dim + 1):
                bounds_so_far[(l, i)] = unit_bounds(
                    net, domain, l, i, bounds_so_far, mode,
                    stability_tol, time_limit, feas_threshold,
                )
    enc = encode_unit_constraints(net, domain, bounds_so_far, (layer, unit), stability_tol)
    H, prov_h = _solve_side(enc.problem, mode, time_limit, feas_threshold)
    H_bar, prov_hb = _solve_side(_negated(enc.problem), mode, time_limit, feas_threshold)
    if not (math.isfinite(H) and math.isfinite(H_bar)):
        # a hard time limit can leave an uninformative infinite bound; fall
        # back to interval arithmetic, which is finite and still conservative
        lo, hi = preactivation_intervals(net, domain)[layer - 1]
        if not math.isfinite(H):
            H = float(hi[unit - 1])
        if not math.isfinite(H_bar):
            H_bar = float(-lo[unit - 1])
    order = {"exact": 0, "feasibility": 1, "relaxed": 2}
    prov = prov_h if order[prov_h] >= order[prov_hb] else prov_hb
    return UnitBounds(H=H, H_bar=H_bar, provenance=prov)


def _thread_count(explicit):
    if explicit is not None:
        return max(1, int(explicit))
    env = os.environ.get("RELUFORGE_THREADS", "")
    try:
        return max(1, int(env)) if env else 1
    except ValueError:
        return 1


def classify_units(
    net,
    domain,
    mode="exact",
    stability_tol=0.0,
    time_limit=None,
    feas_threshold=0.0,
    threads=None,
):
    """Bound and classify every hidden unit, layer by layer.

    Units within a layer are independent given the prior layers' bounds and
    can be solved by a small thread pool (RELUFORGE_THREADS or the threads
    argument); layers are a sequential barrier.
    """
    if mode not in MODES:
        raise DimensionMismatchError(f"unknown mode {mode!r}")
    if domain.dim != net.input_dim:
        raise DimensionMismatchError("domain dimension does not match network input")
    n_workers = _thread_count(threads)
    table = {}
    records = {}
    t0 = time.perf_counter()

    def solve_one(layer, i):
        t = time.perf_counter()
        ub = unit_bounds(
            net, domain, layer, i, table, mode,
            stability_tol, time_limit, feas_threshold,
        )
        ms = (time.perf_counter() - t) * 1000.0
        return i, ub, ms

    for layer in range(1, net.num_hidden_layers + 1):
        width = net.layers[layer - 1].out_dim
        if n_workers > 1 and width > 1:
            with ThreadPoolExecutor(max_workers=n_workers) as pool:
                results = list(pool.map(lambda i: solve_one(layer, i), range(1, width + 1)))
        else:
            results = [solve_one(layer, i) for i in range(1, width + 1)]
        for i, ub, ms in results:
            table[(layer, i)] = ub
            records[(layer, i)] = UnitRecord(
                layer=layer,
                index=i,
                H=ub.H,
                H_bar=ub.H_bar,
                classification=ub.classify(stability_tol),
                provenance=ub.provenance,
                solve_ms=ms,
            )

    total_ms = (time.perf_counter() - t0) * 1000.0
    return StabilityReport(
        net_fingerprint=fingerprint(net),
        domain=domain,
        mode=mode,
        stability_tol=float(stability_tol),
        units=records,
        stats={"total_ms": total_ms, "units": len(records), "threads": n_workers},
        created_at=datetime.now(timezone.utc).isoformat(),
    )
