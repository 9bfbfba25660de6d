#!/usr/bin/env python3
"""Plot a local-stability sweep CSV (as written by `reluforge local-stability`).

Usage: plot_local_stability.py sweep.csv [out.png]
"""

import csv
import sys


def main(argv):
    if not 2 <= len(argv) <= 3:
        print(__doc__.strip(), file=sys.stderr)
        return 2
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    with open(argv[1]) as fh:
        rows = list(csv.DictReader(fh))
    deltas = [float(r["delta"]) for r in rows]
    patterns = [int(r["patterns"]) for r in rows]
    stable = [int(r["stably_inactive"]) + int(r["stably_active"]) for r in rows]

    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(deltas, patterns, "o-", label="activation patterns")
    ax.plot(deltas, stable, "s--", label="stable units")
    ax.set_xscale("log")
    ax.set_yscale("symlog")  # pattern counts explode, stable counts hit 0
    ax.set_xlabel("box half-width $\\delta$")
    ax.set_ylabel("count")
    ax.legend()
    ax.grid(True, which="both", alpha=0.3)
    fig.tight_layout()
    out = argv[2] if len(argv) == 3 else "local_stability.png"
    fig.savefig(out, dpi=150)
    print(out)
    return 0


if __name__ == "__main__":
    raise SystemExit(main(sys.argv))
