#!/usr/bin/env python3
"""Compare the compiled simplex kernels against the numpy fallback.

Two views: microbenchmarks calling both implementations on identical inputs,
and an end-to-end stability+enumeration workload run in subprocesses with the
fallback forced via RELUFORGE_PURE. Run from the repo root:

    python3 benchmarks/bench_kernels.py
"""

import os
import pathlib
import subprocess
import sys
import time

import numpy as np

sys.path.insert(0, str(pathlib.Path(__file__).resolve().parents[1] / "src"))

from reluforge.opt import _kernels_py as kpy

try:
    from reluforge.opt import _speedups as kcy
except ImportError:
    kcy = None


def bench(fn, args_iter, repeats=5):
    """Best-of-repeats total seconds for calling fn over args_iter."""
    best = np.inf
    for _ in range(repeats):
        t0 = time.perf_counter()
        for args in args_iter:
            fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def micro_cases(rng, m, count):
    entering, ratio, eta = [], [], []
    for _ in range(count):
        d = rng.normal(size=m)
        state = rng.integers(0, 4, size=m).astype(np.int8)
        allowed = (rng.random(m) < 0.8).astype(np.uint8)
        entering.append((d, state, allowed, False, 1e-9))

        xB = rng.normal(size=m)
        w = rng.normal(size=m)
        lbB = xB - rng.random(m)
        ubB = xB + rng.random(m)
        basis = np.arange(m, dtype=np.intp)
        ratio.append((xB, w, lbB, ubB, basis, 1.0, 2.0, False, 1e-11))

        Binv = np.eye(m) + rng.normal(size=(m, m)) * 0.01
        wv = rng.normal(size=m)
        wv[m // 2] = 1.5
        eta.append((Binv, wv, m // 2))
    return {"choose_entering": entering, "ratio_test": ratio, "eta_update": eta}


def run_micro():
    rng = np.random.default_rng(0)
    print(f"{'kernel':<16} {'m':>5} {'numpy':>10} {'cython':>10} {'speedup':>8}")
    for m in (16, 64, 256):
        cases = micro_cases(rng, m, 400)
        for name, args in cases.items():
            # eta_update mutates Binv; give each side its own copies
            py_args = [tuple(a.copy() if isinstance(a, np.ndarray) else a for a in t) for t in args]
            t_py = bench(getattr(kpy, name), py_args)
            if kcy is None:
                print(f"{name:<16} {m:>5} {t_py*1e3:>9.2f}ms {'n/a':>10} {'n/a':>8}")
                continue
            cy_args = [tuple(a.copy() if isinstance(a, np.ndarray) else a for a in t) for t in args]
            t_cy = bench(getattr(kcy, name), cy_args)
            print(f"{name:<16} {m:>5} {t_py*1e3:>9.2f}ms {t_cy*1e3:>9.2f}ms {t_py/t_cy:>7.1f}x")


WORKLOAD = r"""
import time
import numpy as np
from reluforge import BoxDomain, Layer, Network, classify_units, enumerate_patterns
from reluforge.opt import kernels

rng = np.random.default_rng(42)
dims = [3, 6, 6, 5, 2]
layers = []
for i in range(len(dims) - 1):
    w = rng.normal(0, 1.4 / np.sqrt(dims[i]), size=(dims[i + 1], dims[i]))
    b = rng.normal(0, 0.3, size=dims[i + 1])
    layers.append(Layer(w, b, "identity" if i == len(dims) - 2 else "relu"))
net = Network(tuple(layers), dims[0])
dom = BoxDomain.uniform(3, -1.0, 1.0)
t0 = time.perf_counter()
rep = classify_units(net, dom, mode="exact")
ps = enumerate_patterns(net, dom, rep)
print(f"{kernels.IMPLEMENTATION}: {time.perf_counter()-t0:.2f}s "
      f"({len(ps)} patterns, {rep.counts()})")
"""


def run_end_to_end():
    env = dict(os.environ)
    env["PYTHONPATH"] = str(pathlib.Path(__file__).resolve().parents[1] / "src")
    for pure in ("0", "1"):
        env["RELUFORGE_PURE"] = pure
        sys.stdout.flush()  # keep parent and child output in order when piped
        subprocess.run([sys.executable, "-c", WORKLOAD], env=env, check=True)


if __name__ == "__main__":
    if kcy is None:
        print("compiled extension not built; showing fallback only\n")
    run_micro()
    print("\nend-to-end (MILP classification + region enumeration, [3,6,6,5,2]):")
    run_end_to_end()
