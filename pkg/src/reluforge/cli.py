"""Command-line frontend.

One subcommand per analysis: bounds, compress, regions, shallow, verify,
local-stability, widths. File outputs are JSON or CSV; human-readable
summaries go to stdout. Exit codes: 0 success, 1 verification failure,
2 usage error, 3 solver/size limit reached with partial results.

Volatile values (timestamps, solve times) live in designated fields
(created_at, solve_ms, time_s, stats) so the rest of every artifact is
byte-identical across reruns of the same config and seed.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
import time
from datetime import datetime, timezone

import numpy as np

from .compressor import stability_compression
from .equiv import check_interior_filtered, check_region_exact, check_sampled
from .exceptions import ReluForgeError, SizeLimitError
from .network import BoxDomain, fingerprint, load_network_file, save_network_file
from .regions import enumerate_patterns, load_patterns_file, save_patterns_file
from .shallow import (
    ShallowConfig,
    shallow_full,
    shallow_patterns,
    widths_full,
    widths_patterns,
)
from .stability import MODES, classify_units

EXIT_OK = 0
EXIT_VERIFY = 1
EXIT_USAGE = 2
EXIT_LIMIT = 3


def _now():
    return datetime.now(timezone.utc).isoformat()


def _load_center(path):
    with open(path, "r", encoding="utf-8") as fh:
        obj = json.load(fh)
    if isinstance(obj, dict):
        obj = obj.get("center")
    arr = np.asarray(obj, dtype=np.float64)
    if arr.ndim != 1:
        raise ValueError("center file must hold a flat list of floats")
    return arr


def _resolve_domain(args, net):
    n0 = net.input_dim
    if getattr(args, "domain_center", None) is not None:
        if args.delta is None:
            raise ValueError("--domain-center requires --delta")
        center = _load_center(args.domain_center)
        if center.shape[0] != n0:
            raise ValueError(
                f"center has {center.shape[0]} entries, the net expects {n0}"
            )
        return BoxDomain(center - args.delta, center + args.delta)
    if getattr(args, "domain", None) is not None:
        lo, hi = args.domain
        return BoxDomain.uniform(n0, lo, hi)
    return BoxDomain.uniform(n0, 0.0, 1.0)


def _domain_args(p):
    p.add_argument(
        "--domain",
        type=_parse_pair,
        default=None,
        metavar="LO,HI",
        help="uniform box [lo,hi]^n0 (default [0,1]^n0)",
    )
    p.add_argument(
        "--domain-center",
        default=None,
        metavar="FILE",
        help="JSON file with a center point; used with --delta",
    )
    p.add_argument("--delta", type=float, default=None, help="half-width around the center")


def _parse_pair(text):
    parts = text.split(",")
    if len(parts) != 2:
        raise argparse.ArgumentTypeError("expected LO,HI")
    return float(parts[0]), float(parts[1])


def _parse_floats(text):
    try:
        return [float(v) for v in text.split(",") if v != ""]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc))


def _parse_ints(text):
    try:
        return [int(v) for v in text.split(",") if v != ""]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc))


def _write_text(path, text):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(text)
        if not text.endswith("\n"):
            fh.write("\n")


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------


def cmd_bounds(args):
    net = load_network_file(args.net)
    domain = _resolve_domain(args, net)
    report = classify_units(
        net,
        domain,
        mode=args.mode,
        stability_tol=args.stability_tol,
        time_limit=args.time_limit,
    )
    if args.out:
        _write_text(args.out, report.to_json())
    if args.csv:
        with open(args.csv, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(["layer", "units", "stably_inactive", "stably_active", "unstable"])
            for l, width in enumerate(net.hidden_widths, start=1):
                row = {"stably-inactive": 0, "stably-active": 0, "unstable": 0}
                for i in range(1, width + 1):
                    row[report.record(l, i).classification] += 1
                w.writerow(
                    [l, width, row["stably-inactive"], row["stably-active"], row["unstable"]]
                )
    counts = report.counts()
    print(
        f"bounds: {counts.get('stably-inactive', 0)} inactive, "
        f"{counts.get('stably-active', 0)} active, "
        f"{counts.get('unstable', 0)} unstable "
        f"({report.mode}, fingerprint {report.net_fingerprint[:12]})"
    )
    return EXIT_OK


def cmd_compress(args):
    net = load_network_file(args.net)
    domain = _resolve_domain(args, net)
    report = classify_units(net, domain, mode=args.mode, time_limit=args.time_limit)
    compressed, trace = stability_compression(net, domain, report)
    if not args.no_verify:
        check = check_sampled(
            net, compressed, domain, n_samples=args.samples, tol=args.tol, seed=args.seed
        )
        if check.verdict != "pass":
            print(
                f"compress: REFUSED, sampled check failed "
                f"(max rel deviation {check.max_rel_deviation:.3e})",
                file=sys.stderr,
            )
            return EXIT_VERIFY
    if args.out:
        save_network_file(compressed, args.out)
    if args.emit_trace:
        _write_text(args.emit_trace, trace.to_json())
    print(
        f"compress: {net.widths} -> {compressed.widths}; "
        f"{len(trace.actions)} actions"
        + ("" if args.no_verify else "; verified")
    )
    return EXIT_OK


def _region_counts(report):
    counts = report.counts()
    return counts.get("stably-inactive", 0), counts.get("stably-active", 0)


def cmd_regions(args):
    net = load_network_file(args.net)
    rows = []
    incomplete = False
    if args.alpha:
        domains = [("alpha=" + repr(a), BoxDomain.uniform(net.input_dim, 0.0, a)) for a in args.alpha]
    else:
        domains = [("box", _resolve_domain(args, net))]
    last_ps = None
    for label, domain in domains:
        t0 = time.perf_counter()
        report = classify_units(net, domain, mode="feasibility-first", time_limit=args.time_limit)
        ps = enumerate_patterns(
            net, domain, report, max_patterns=args.limit, time_limit=args.time_limit
        )
        elapsed = time.perf_counter() - t0
        n_inact, n_act = _region_counts(report)
        rows.append(
            {
                "domain": label,
                "stably_inactive": n_inact,
                "stably_active": n_act,
                "patterns": len(ps),
                "complete": ps.complete,
                "time_s": round(elapsed, 6),
            }
        )
        incomplete = incomplete or not ps.complete
        last_ps = ps
    if args.out and not args.alpha and last_ps is not None:
        save_patterns_file(last_ps, args.out)
    if args.summary:
        with open(args.summary, "w", newline="", encoding="utf-8") as fh:
            w = csv.DictWriter(fh, fieldnames=list(rows[0].keys()))
            w.writeheader()
            w.writerows(rows)
    for row in rows:
        print(
            f"regions[{row['domain']}]: {row['patterns']} patterns "
            f"(complete={row['complete']}), {row['stably_inactive']} inactive, "
            f"{row['stably_active']} active, {row['time_s']:.2f}s"
        )
    return EXIT_LIMIT if incomplete else EXIT_OK


def cmd_shallow(args):
    net = load_network_file(args.net)
    domain = _resolve_domain(args, net)
    full_w = widths_full(net.widths)
    patterns = None
    pattern_w = None
    if args.patterns:
        patterns = load_patterns_file(args.patterns)
    elif not args.widths_only:
        report = classify_units(net, domain, mode="feasibility-first")
        patterns = enumerate_patterns(net, domain, report)
    if patterns is not None and patterns.complete:
        from .regions import prefix_sets

        sizes = prefix_sets(patterns).sizes()
        counts = [sizes[d] for d in range(net.num_hidden_layers)]
        pattern_w = widths_patterns(net.widths, counts)
    row = {
        "arch": list(net.widths),
        "patterns": len(patterns) if patterns is not None else None,
        "full_n1": full_w[0],
        "full_n2": full_w[1],
        "patterns_n1": pattern_w[0] if pattern_w else None,
        "patterns_n2": pattern_w[1] if pattern_w else None,
    }
    print("shallow widths: " + json.dumps(row))
    if args.widths_only:
        if args.out:
            _write_text(args.out, json.dumps(row, indent=1))
        return EXIT_OK
    cfg = ShallowConfig(
        epsilon=args.epsilon,
        norm=args.norm,
        H_strategy="user-supplied" if args.big_h is not None else args.h_strategy,
        H=args.big_h,
    )
    try:
        if args.construction == "patterns":
            out_net = shallow_patterns(net, domain, patterns, cfg)
        else:
            out_net = shallow_full(net, domain, cfg)
    except SizeLimitError as exc:
        print(f"shallow: network skipped ({exc}); widths reported above", file=sys.stderr)
        if args.out:
            _write_text(args.out, json.dumps(row, indent=1))
        return EXIT_OK
    if args.out:
        save_network_file(out_net, args.out)
    print(
        f"shallow: emitted {out_net.widths} ({args.construction}, "
        f"H={out_net.metadata['H']})"
    )
    return EXIT_OK


def cmd_verify(args):
    net1 = load_network_file(args.net)
    net2 = load_network_file(args.other)
    domain = _resolve_domain(args, net1)
    if args.check == "sampled":
        rep = check_sampled(
            net1, net2, domain, n_samples=args.samples, tol=args.tol, seed=args.seed
        )
    elif args.check == "interior-filtered":
        rep = check_interior_filtered(
            net1,
            net2,
            domain,
            epsilon=args.epsilon,
            norm=args.norm,
            n_samples=args.samples,
            tol=args.tol,
            seed=args.seed,
        )
    else:
        if args.patterns:
            ps = load_patterns_file(args.patterns)
        else:
            report = classify_units(net1, domain, mode="feasibility-first")
            ps = enumerate_patterns(net1, domain, report)
        rep = check_region_exact(net1, net2, domain, ps)
    doc = {
        "format": "verify-run",
        "version": 1,
        "net1_fingerprint": fingerprint(net1),
        "net2_fingerprint": fingerprint(net2),
        "report": rep.to_jsonable(),
        "created_at": _now(),
    }
    if args.out:
        _write_text(args.out, json.dumps(doc, indent=1))
    extra = (
        f", acceptance {rep.acceptance_ratio:.1%}"
        if rep.acceptance_ratio is not None
        else ""
    )
    print(
        f"verify[{rep.mode}]: {rep.verdict} over {rep.samples} "
        f"{'regions' if rep.mode == 'region-exact' else 'samples'} "
        f"(max rel deviation {rep.max_rel_deviation:.3e}{extra})"
    )
    return EXIT_OK if rep.verdict == "pass" else EXIT_VERIFY


def cmd_local_stability(args):
    net = load_network_file(args.net)
    center = _load_center(args.center)
    if center.shape[0] != net.input_dim:
        raise ValueError("center length does not match the network input")
    rows = []
    incomplete = False
    for delta in args.deltas:
        domain = BoxDomain(center - delta, center + delta)
        t0 = time.perf_counter()
        report = classify_units(net, domain, mode="feasibility-first", time_limit=args.time_limit)
        ps = enumerate_patterns(net, domain, report, time_limit=args.time_limit)
        elapsed = time.perf_counter() - t0
        incomplete = incomplete or not ps.complete
        n_inact, n_act = _region_counts(report)
        rows.append(
            {
                "delta": repr(delta),
                "stably_inactive": n_inact,
                "stably_active": n_act,
                "patterns": len(ps),
                "complete": ps.complete,
                "time_s": round(elapsed, 6),
            }
        )
    if args.out:
        with open(args.out, "w", newline="", encoding="utf-8") as fh:
            w = csv.DictWriter(fh, fieldnames=list(rows[0].keys()))
            w.writeheader()
            w.writerows(rows)
    for row in rows:
        print(
            f"local-stability[delta={row['delta']}]: {row['patterns']} patterns, "
            f"{row['stably_inactive']} inactive, {row['stably_active']} active"
        )
    return EXIT_LIMIT if incomplete else EXIT_OK


def cmd_widths(args):
    full = widths_full(args.arch)
    doc = {"arch": args.arch, "full_n1": full[0], "full_n2": full[1]}
    if args.prefix_counts:
        pw = widths_patterns(args.arch, args.prefix_counts)
        doc["patterns_n1"], doc["patterns_n2"] = pw[0], pw[1]
    text = json.dumps(doc, indent=1)
    if args.out:
        _write_text(args.out, text)
    print(text)
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------


def build_parser():
    p = argparse.ArgumentParser(
        prog="reluforge",
        description="Stability, compression, region, and rewrite analysis "
        "of feed-forward ReLU networks over box domains.",
    )
    sub = p.add_subparsers(dest="command", required=True)

    b = sub.add_parser("bounds", help="classify every hidden unit's stability")
    b.add_argument("--net", required=True)
    _domain_args(b)
    b.add_argument("--mode", choices=MODES, default="exact")
    b.add_argument("--stability-tol", type=float, default=0.0)
    b.add_argument("--time-limit", type=float, default=None)
    b.add_argument("--out", default=None, help="stability report JSON")
    b.add_argument("--csv", default=None, help="per-layer stable counts CSV")
    b.set_defaults(func=cmd_bounds)

    c = sub.add_parser("compress", help="remove stable units, fold dependent rows")
    c.add_argument("--net", required=True)
    _domain_args(c)
    c.add_argument("--mode", choices=MODES, default="exact")
    c.add_argument("--time-limit", type=float, default=None)
    c.add_argument("--out", default=None, help="compressed network JSON")
    c.add_argument("--emit-trace", default=None, help="replayable action trace JSON")
    c.add_argument("--no-verify", action="store_true", help="skip the sampled equivalence check (unsafe)")
    c.add_argument("--samples", type=int, default=10_000)
    c.add_argument("--tol", type=float, default=1e-6)
    c.add_argument("--seed", type=int, default=0)
    c.set_defaults(func=cmd_compress)

    r = sub.add_parser("regions", help="enumerate activation patterns")
    r.add_argument("--net", required=True)
    _domain_args(r)
    r.add_argument("--alpha", type=_parse_floats, default=None, metavar="A1,A2,...",
                   help="sweep of [0,alpha]^n0 boxes instead of a single domain")
    r.add_argument("--limit", type=int, default=None, help="stop after this many patterns")
    r.add_argument("--time-limit", type=float, default=None)
    r.add_argument("--out", default=None, help="pattern set JSONL (single-domain mode)")
    r.add_argument("--summary", default=None, help="summary CSV")
    r.set_defaults(func=cmd_regions)

    s = sub.add_parser("shallow", help="rewrite as two hidden layers")
    s.add_argument("--net", required=True)
    _domain_args(s)
    s.add_argument("--epsilon", type=float, default=1e-3)
    s.add_argument("--norm", choices=("linf", "l2"), default="linf")
    s.add_argument("--h-strategy", choices=("auto", "conservative-interval", "lp-min-violation"), default="auto")
    s.add_argument("--big-h", type=float, default=None, help="user-supplied penalty constant")
    s.add_argument("--construction", choices=("full", "patterns"), default="patterns")
    s.add_argument("--patterns", default=None, help="pattern set JSONL (else enumerated)")
    s.add_argument("--widths-only", action="store_true", help="report widths, build nothing")
    s.add_argument("--out", default=None, help="rewritten network JSON")
    s.set_defaults(func=cmd_shallow)

    v = sub.add_parser("verify", help="compare two networks")
    v.add_argument("--net", required=True, help="reference network")
    v.add_argument("--other", required=True, help="network under test")
    _domain_args(v)
    v.add_argument("--check", choices=("sampled", "region-exact", "interior-filtered"), default="sampled")
    v.add_argument("--samples", type=int, default=10_000)
    v.add_argument("--tol", type=float, default=1e-6)
    v.add_argument("--seed", type=int, default=0)
    v.add_argument("--epsilon", type=float, default=1e-3)
    v.add_argument("--norm", choices=("linf", "l2"), default="linf")
    v.add_argument("--patterns", default=None, help="pattern set JSONL for region-exact")
    v.add_argument("--out", default=None, help="verification report JSON")
    v.set_defaults(func=cmd_verify)

    ls = sub.add_parser("local-stability", help="delta-sweep around a center point")
    ls.add_argument("--net", required=True)
    ls.add_argument("--center", required=True, help="JSON file with the center point")
    ls.add_argument("--deltas", type=_parse_floats, required=True, metavar="D1,D2,...")
    ls.add_argument("--time-limit", type=float, default=None)
    ls.add_argument("--out", default=None, help="sweep CSV")
    ls.set_defaults(func=cmd_local_stability)

    w = sub.add_parser("widths", help="rewrite width formulas (exact integers)")
    w.add_argument("--arch", type=_parse_ints, required=True, metavar="N0,N1,...")
    w.add_argument("--prefix-counts", type=_parse_ints, default=None, metavar="C0,C1,...")
    w.add_argument("--out", default=None)
    w.set_defaults(func=cmd_widths)

    return p


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ReluForgeError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


def entry():
    sys.exit(main())


if __name__ == "__main__":
    entry()
