#!/usr/bin/env python3
"""Regenerate the committed test fixtures.

Searches random seeds for a small network whose delta-sweep around a fixed
center shows the canonical shape: one activation pattern in the small-delta
limit, pattern counts growing and stable-unit counts shrinking as the box
widens. The winning net and center are written to tests/fixtures/ and are
meant to be committed, so the test suite never depends on this search.
"""

import json
import pathlib
import sys

import numpy as np

sys.path.insert(0, str(pathlib.Path(__file__).resolve().parents[1] / "src"))

from reluforge import (
    BoxDomain,
    Layer,
    Network,
    classify_units,
    enumerate_patterns,
    save_network_file,
)

ARCH = [3, 6, 5, 2]
DELTAS = [1e-4, 1e-3, 1e-2, 1e-1, 1.0]
OUT_DIR = pathlib.Path(__file__).resolve().parents[1] / "tests" / "fixtures"


def random_net(rng):
    layers = []
    dims = list(ARCH)
    for i in range(len(dims) - 1):
        n_in, n_out = dims[i], dims[i + 1]
        w = rng.normal(0.0, 1.6 / np.sqrt(n_in), size=(n_out, n_in))
        b = rng.normal(0.0, 0.4, size=n_out)
        act = "identity" if i == len(dims) - 2 else "relu"
        layers.append(Layer(w, b, act))
    return Network(tuple(layers), dims[0])


def sweep(net, center):
    rows = []
    for delta in DELTAS:
        dom = BoxDomain(center - delta, center + delta)
        rep = classify_units(net, dom, mode="feasibility-first")
        ps = enumerate_patterns(net, dom, rep)
        if not ps.complete:
            return None
        c = rep.counts()
        rows.append((len(ps), c["stably-active"] + c["stably-inactive"]))
    return rows


def good_shape(rows):
    pats = [r[0] for r in rows]
    stab = [r[1] for r in rows]
    total = sum(ARCH[1:-1])
    if pats[0] != 1 or stab[0] != total:
        return False
    if pats != sorted(pats) or stab != sorted(stab, reverse=True):
        return False
    # want visible movement at both ends, and a tractable final count
    if pats[-1] < 12 or pats[-1] > 250 or stab[-1] > total - 4:
        return False
    return len(set(pats)) >= 3 and len(set(stab)) >= 3


def main():
    for seed in range(500):
        rng = np.random.default_rng(seed)
        net = random_net(rng)
        center = rng.uniform(-0.5, 0.5, size=ARCH[0])
        rows = sweep(net, center)
        if rows is None or not good_shape(rows):
            continue
        OUT_DIR.mkdir(parents=True, exist_ok=True)
        save_network_file(net, OUT_DIR / "localstab_net.json")
        (OUT_DIR / "localstab_center.json").write_text(
            json.dumps({"center": [float(v) for v in center]}, indent=1) + "\n"
        )
        print(f"seed={seed}")
        for delta, (pats, stab) in zip(DELTAS, rows):
            print(f"  delta={delta:<8g} patterns={pats:<4d} stable={stab}")
        return 0
    print("no seed produced the required sweep shape", file=sys.stderr)
    return 1


if __name__ == "__main__":
    raise SystemExit(main())
