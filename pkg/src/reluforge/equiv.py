"""Equivalence certification between two networks.

Three check modes: plain uniform sampling, exact per-region affine-map
comparison driven by a complete pattern enumeration, and sampling filtered
to epsilon-interior points (the regime where the two-hidden-layer rewrites
promise agreement). All deviations are measured in the sup norm with the
relative scale 1 + |f1(x)|_inf, which keeps near-zero outputs from blowing
up the ratio.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .exceptions import DimensionMismatchError, ParseError, ReportMismatchError
from .network import forward, forward_batch, region_affine_map
from .opt import LpBuilder, solve_lp
from .regions import region_constraints
from .shallow import is_interior

REPORT_FORMAT = "equivalence-report"
REPORT_VERSION = 1

MODES = ("sampled", "region-exact", "interior-filtered")
REGION_TOL = 1e-8
MAX_RECORDED_FAILURES = 25


@dataclass(frozen=True)
class EquivalenceReport:
    mode: str
    samples: int
    max_abs_deviation: float
    max_rel_deviation: float
    verdict: str  # pass | fail | inconclusive
    tol: float
    failures: tuple = ()  # up to MAX_RECORDED_FAILURES (x, f1, f2) triples
    acceptance_ratio: float | None = None

    @property
    def passed(self):
        return self.verdict == "pass"

    def to_jsonable(self):
        return {
            "format": REPORT_FORMAT,
            "version": REPORT_VERSION,
            "mode": self.mode,
            "samples": self.samples,
            "max_abs_deviation": self.max_abs_deviation,
            "max_rel_deviation": self.max_rel_deviation,
            "verdict": self.verdict,
            "tol": self.tol,
            "failures": [
                {"x": list(x), "f1": list(a), "f2": list(b)}
                for x, a, b in self.failures
            ],
            "acceptance_ratio": self.acceptance_ratio,
        }

    def to_json(self):
        return json.dumps(self.to_jsonable(), indent=1, allow_nan=False)

    @classmethod
    def from_jsonable(cls, obj):
        if not isinstance(obj, dict) or obj.get("format") != REPORT_FORMAT:
            raise ParseError("not an equivalence report document")
        if obj.get("version") != REPORT_VERSION:
            raise ParseError(f"unsupported report version {obj.get('version')!r}")
        fails = tuple(
            (tuple(f["x"]), tuple(f["f1"]), tuple(f["f2"]))
            for f in obj.get("failures", [])
        )
        return cls(
            mode=obj["mode"],
            samples=int(obj["samples"]),
            max_abs_deviation=float(obj["max_abs_deviation"]),
            max_rel_deviation=float(obj["max_rel_deviation"]),
            verdict=obj["verdict"],
            tol=float(obj["tol"]),
            failures=fails,
            acceptance_ratio=obj.get("acceptance_ratio"),
        )

    @classmethod
    def from_json(cls, text):
        try:
            obj = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ParseError(f"invalid JSON: {exc}") from exc
        return cls.from_jsonable(obj)


def _check_dims(net1, net2, domain):
    if net1.input_dim != net2.input_dim or net1.output_dim != net2.output_dim:
        raise DimensionMismatchError("networks have different input/output dims")
    if domain.dim != net1.input_dim:
        raise DimensionMismatchError("domain does not fit the networks")


def _compare_batch(net1, net2, X, tol, mode, acceptance=None, total=None):
    if len(X) == 0:
        return EquivalenceReport(
            mode=mode,
            samples=0,
            max_abs_deviation=0.0,
            max_rel_deviation=0.0,
            verdict="pass",
            tol=tol,
            acceptance_ratio=acceptance,
        )
    y1, _ = forward_batch(net1, X)
    y2, _ = forward_batch(net2, X)
    abs_dev = np.max(np.abs(y1 - y2), axis=1)
    rel_dev = abs_dev / (1.0 + np.max(np.abs(y1), axis=1))
    bad = np.flatnonzero(rel_dev > tol)
    failures = tuple(
        (tuple(map(float, X[i])), tuple(map(float, y1[i])), tuple(map(float, y2[i])))
        for i in bad[:MAX_RECORDED_FAILURES]
    )
    return EquivalenceReport(
        mode=mode,
        samples=len(X),
        max_abs_deviation=float(np.max(abs_dev)),
        max_rel_deviation=float(np.max(rel_dev)),
        verdict="fail" if len(bad) else "pass",
        tol=tol,
        failures=failures,
        acceptance_ratio=acceptance,
    )


def check_sampled(net1, net2, domain, n_samples=10_000, tol=1e-6, seed=0):
    """Compare the two nets on uniform samples from the domain."""
    _check_dims(net1, net2, domain)
    X = domain.sample(np.random.default_rng(seed), n_samples)
    return _compare_batch(net1, net2, X, tol, "sampled")


def check_interior_filtered(
    net1, net2, domain, epsilon, norm="linf", n_samples=10_000, tol=1e-6, seed=0
):
    """Compare only on samples epsilon-deep inside net1's linear regions.

    Records the filter's acceptance ratio; if it rejects every sample the
    verdict is inconclusive rather than pass or fail.
    """
    _check_dims(net1, net2, domain)
    X = domain.sample(np.random.default_rng(seed), n_samples)
    keep = np.array([is_interior(net1, x, epsilon, norm) for x in X], dtype=bool)
    acceptance = float(keep.mean()) if n_samples else 0.0
    if not keep.any():
        return EquivalenceReport(
            mode="interior-filtered",
            samples=0,
            max_abs_deviation=0.0,
            max_rel_deviation=0.0,
            verdict="inconclusive",
            tol=tol,
            acceptance_ratio=acceptance,
        )
    return _compare_batch(
        net1, net2, X[keep], tol, "interior-filtered", acceptance=acceptance
    )


def _chebyshev_witness(net, domain, pattern):
    """Deepest point of the pattern's region: maximize the radius of an
    inscribed ball, turning every face row a.x <= rhs into a.x + |a| t <= rhs."""
    rows = region_constraints(net, domain, pattern)
    b = LpBuilder()
    n0 = net.input_dim
    for k in range(n0):
        b.add_var(f"x{k}", domain.lower[k], domain.upper[k])
    span = float(np.max(domain.upper - domain.lower)) / 2.0 + 1.0
    t = b.add_var("t", 0.0, span)
    for row in rows:
        coeffs = {k: row.coeffs[k] for k in range(n0) if row.coeffs[k] != 0.0}
        coeffs[t] = float(np.linalg.norm(row.coeffs))
        b.add_constraint(coeffs, "<=", row.rhs)
    for k in range(n0):
        b.add_constraint({k: 1.0, t: 1.0}, "<=", domain.upper[k])
        b.add_constraint({k: -1.0, t: 1.0}, "<=", -domain.lower[k])
    b.set_objective("max", {t: 1.0})
    sol = solve_lp(b.build_lp())
    if sol.status != "optimal":
        return None
    return sol.x[:n0]


def check_region_exact(net1, net2, domain, patterns1):
    """Certify equality of the affine maps region by region.

    For each pattern of net1, a Chebyshev-center witness locates the region;
    net2's map on its own region at the witness must match net1's map
    coefficient-wise to 1e-8. A pass certifies agreement on the union of
    region interiors, not just at sampled points.
    """
    from .network import fingerprint

    _check_dims(net1, net2, domain)
    patterns1.require_complete()
    if patterns1.net_fingerprint != fingerprint(net1):
        raise ReportMismatchError("pattern set was enumerated for a different network")
    max_abs = 0.0
    max_rel = 0.0
    failures = []
    for p in patterns1.sorted_patterns():
        m1 = region_affine_map(net1, p)
        witness = _chebyshev_witness(net1, domain, p)
        if witness is None:
            failures.append(((), (), ()))
            continue
        _, p2 = forward(net2, witness)
        m2 = region_affine_map(net2, p2)
        gap = max(
            float(np.max(np.abs(m1.matrix - m2.matrix))),
            float(np.max(np.abs(m1.offset - m2.offset))),
        )
        scale = 1.0 + max(
            float(np.max(np.abs(m1.matrix))), float(np.max(np.abs(m1.offset)))
        )
        max_abs = max(max_abs, gap)
        max_rel = max(max_rel, gap / scale)
        if gap > REGION_TOL:
            if len(failures) < MAX_RECORDED_FAILURES:
                y1, _ = forward(net1, witness)
                y2, _ = forward(net2, witness)
                failures.append(
                    (
                        tuple(map(float, witness)),
                        tuple(map(float, y1)),
                        tuple(map(float, y2)),
                    )
                )
            else:
                failures.append(((), (), ()))
    return EquivalenceReport(
        mode="region-exact",
        samples=len(patterns1),
        max_abs_deviation=max_abs,
        max_rel_deviation=max_rel,
        verdict="fail" if failures else "pass",
        tol=REGION_TOL,
        failures=tuple(failures[:MAX_RECORDED_FAILURES]),
    )
