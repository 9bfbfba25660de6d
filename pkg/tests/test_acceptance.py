"""Top-level acceptance gates, one test per contract, each with a time budget.

Every test is self-contained (fixed seeds, committed fixture files) and prints
a single [ACCEPTANCE] line on success; the time budget is asserted, not just
aspirational.
"""

import csv
import time

import numpy as np
import pytest

from reluforge import (
    BoxDomain,
    Layer,
    Network,
    check_interior_filtered,
    classify_units,
    enumerate_patterns,
    exhaustive_lp_patterns,
    brute_force_patterns,
    load_network_file,
    shallow_full,
    shallow_patterns,
    stability_compression,
    widths_full,
    widths_patterns,
    zaslavsky_bound,
    ShallowConfig,
)
from reluforge.cli import main as cli_main
from reluforge.opt import LinearConstraint, solve_milp

import oracles
from test_opt_milp import binary_milp, random_binary_instance


def _done(name, t0, budget):
    elapsed = time.monotonic() - t0
    assert elapsed < budget, f"{name} took {elapsed:.1f}s, budget {budget}s"
    print(f"[ACCEPTANCE] {name}: PASS ({elapsed:.2f}s)")


def test_width_formulas_exact():
    t0 = time.monotonic()
    assert widths_full([784, 5, 5, 5, 10]) == (5450, 10240)
    assert widths_full([784, 5, 5, 10, 10, 10]) == (10506570, 10485760)
    assert widths_full([784, 5, 5, 5, 10, 10, 10]) == (336210250, 335544320)
    assert widths_patterns([784, 5, 5, 5, 10], [1, 58, 190]) == (1540, 1900)
    _done("width formulas", t0, 1.0)


def test_zaslavsky_sanity():
    t0 = time.monotonic()
    dom = BoxDomain.uniform(2, -1.0, 1.0)
    # three lines in general position, all crossings interior to the box
    w1 = np.array([[1.0, 0.0], [0.0, 1.0], [1.0, 1.0]])
    b1 = np.array([-0.3, -0.5, 0.2])
    net = Network(
        (Layer(w1, b1, "relu"), Layer(np.ones((1, 3)), np.zeros(1), "identity")), 2
    )
    rep = classify_units(net, dom, mode="feasibility-first")
    ps = enumerate_patterns(net, dom, rep)
    assert ps.complete and len(ps) == 7

    rng = np.random.default_rng(7)
    for _ in range(100):
        n0 = int(rng.integers(1, 4))
        n1 = int(rng.integers(1, 7))
        net = oracles.random_network(rng, [n0, n1, 1])
        dom = BoxDomain.uniform(n0, -1.0, 1.0)
        rep = classify_units(net, dom, mode="feasibility-first")
        ps = enumerate_patterns(net, dom, rep)
        assert ps.complete
        assert len(ps) <= zaslavsky_bound(n0, n1)
    _done("Zaslavsky sanity", t0, 10.0)


def test_enumeration_oracle_equivalence():
    t0 = time.monotonic()
    rng = np.random.default_rng(25)
    for trial in range(25):
        n0 = int(rng.integers(1, 3))
        while True:
            depth = int(rng.integers(1, 4))
            hidden = [int(rng.integers(1, 6)) for _ in range(depth)]
            if sum(hidden) <= 12:
                break
        net = oracles.random_network(rng, [n0] + hidden + [1])
        dom = BoxDomain.uniform(n0, -1.0, 1.0)
        rep = classify_units(net, dom, mode="feasibility-first")
        ps = enumerate_patterns(net, dom, rep)
        ref = exhaustive_lp_patterns(net, dom)
        assert ps.complete, f"trial {trial}"
        assert ps.patterns == ref.patterns, f"trial {trial}"
        grid = brute_force_patterns(net, dom, resolution=400)
        assert grid.patterns <= ps.patterns, f"trial {trial}"
    _done("enumeration oracle equivalence", t0, 120.0)


def test_compression_equivalence():
    t0 = time.monotonic()
    rng = np.random.default_rng(50)
    cap = [4, 6, 6, 6, 3]
    for trial in range(50):
        widths = [int(rng.integers(2, c + 1)) for c in cap]
        dom = BoxDomain.uniform(widths[0], -1.0, 1.0)
        net, forced = oracles.bias_forced_net(
            rng, widths, dom, folds_per_layer=int(rng.integers(0, 2))
        )
        rep = classify_units(net, dom, mode="exact")
        comp, trace = stability_compression(net, dom, rep)

        X = dom.sample(np.random.default_rng(1000 + trial), 10_000)
        from reluforge.network import forward_batch

        Y1 = forward_batch(net, X)[0]
        Y2 = forward_batch(comp, X)[0]
        rel = np.abs(Y1 - Y2).max(axis=1) / (1.0 + np.abs(Y1).max(axis=1))
        assert rel.max() <= 1e-6, f"trial {trial}: rel={rel.max():.3g}"

        # every stably-inactive unit is gone from the surviving net
        if comp.num_hidden_layers:
            rep_c = classify_units(comp, dom, mode="exact")
            assert rep_c.counts()["stably-inactive"] == 0, f"trial {trial}"
            n_inact = sum(1 for v in forced.values() if v == "stably-inactive")
            assert comp.total_hidden_units <= net.total_hidden_units - n_inact

        rep2 = classify_units(comp, dom, mode="exact")
        comp2, trace2 = stability_compression(comp, dom, rep2)
        assert trace2.actions == (), f"trial {trial}: not idempotent"
        assert comp2.widths == comp.widths
    _done("compression equivalence", t0, 300.0)


def test_shallow_transforms():
    t0 = time.monotonic()
    rng = np.random.default_rng(20)
    cfg = ShallowConfig(epsilon=1e-3, norm="linf")
    for trial in range(20):
        net = oracles.random_network(rng, [2, 2, 2, 1], scale=1.5)
        dom = BoxDomain.uniform(2, -1.0, 1.0)
        rep = classify_units(net, dom, mode="feasibility-first")
        ps = enumerate_patterns(net, dom, rep)
        assert ps.complete

        full = shallow_full(net, dom, cfg)
        pats = shallow_patterns(net, dom, ps, cfg)
        assert full.widths == (2,) + widths_full([2, 2, 2, 1]) + (1,)

        for two in (full, pats):
            r = check_interior_filtered(
                net, two, dom, epsilon=1e-3, norm="linf", n_samples=4000,
                tol=1e-6, seed=trial,
            )
            assert r.verdict == "pass", f"trial {trial}: {r.max_rel_deviation:.3g}"
            assert r.acceptance_ratio >= 0.9, f"trial {trial}"

        if pats.widths != full.widths:
            # some prefix was infeasible, so the region-aware build must win
            assert pats.total_hidden_units < full.total_hidden_units
    _done("shallow transforms", t0, 300.0)


def test_local_stability_shape(tmp_path):
    t0 = time.monotonic()
    out = tmp_path / "sweep.csv"
    code = cli_main(
        [
            "local-stability",
            "--net", "tests/fixtures/localstab_net.json",
            "--center", "tests/fixtures/localstab_center.json",
            "--deltas", "1e-4,1e-3,1e-2,1e-1,1",
            "--out", str(out),
        ]
    )
    assert code == 0
    with open(out) as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == 5 and all(r["complete"] == "True" for r in rows)
    pats = [int(r["patterns"]) for r in rows]
    stable = [int(r["stably_inactive"]) + int(r["stably_active"]) for r in rows]
    assert pats[0] == 1, "small-delta limit must be a single pattern"
    assert pats == sorted(pats)
    assert stable == sorted(stable, reverse=True)
    _done("local-stability shape", t0, 180.0)


def test_milp_engine_soundness():
    t0 = time.monotonic()
    rng = np.random.default_rng(200)
    for trial in range(200):
        n = int(rng.integers(2, 13))
        sense, c, cons = random_binary_instance(rng, n)
        sol = solve_milp(binary_milp(sense, c, cons))
        best, _, feas = oracles.brute_force_binary_milp(sense, c, cons, n)
        if best is None:
            assert sol.status == "infeasible", f"trial {trial}"
        else:
            assert sol.status == "optimal", f"trial {trial}"
            assert sol.objective == pytest.approx(best, abs=1e-6), f"trial {trial}"

        seen = set()

        def hook(x, obj):
            bits = tuple(int(round(v)) for v in x[:n])
            seen.add(bits)
            coeffs = np.array([1.0 if b else -1.0 for b in bits])
            return [LinearConstraint(coeffs, "<=", float(sum(bits)) - 1.0)]

        sol = solve_milp(binary_milp("max", np.ones(n), cons), lazy_cut_hook=hook)
        assert sol.status == "infeasible", f"trial {trial}: tree not exhausted"
        assert seen == set(feas), f"trial {trial}: enumerated set differs"
    _done("MILP engine soundness", t0, 60.0)
