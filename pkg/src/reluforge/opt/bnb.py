"""Branch-and-bound over binary variables with lazy cuts.

Best-bound node order, most-fractional branching. A lazy_cut_hook, when
given, is called on every integral incumbent; if it returns constraints the
incumbent is excluded and the same node is re-solved in place, so one search
tree can enumerate many solutions (the hook may raise AbortSearch to stop).
"""

from __future__ import annotations

import heapq
import itertools
import time

import numpy as np

from .problem import LinearConstraint, LpProblem, Solution
from .simplex import solve_lp

INT_TOL = 1e-6
DEFAULT_GAP = 1e-9


class AbortSearch(Exception):
    """Raised by a lazy-cut hook to stop enumeration early."""


class MilpConfig:
    def __init__(self, time_limit=None, gap_tol=DEFAULT_GAP, target="optimal", node_limit=None):
        self.time_limit = time_limit
        self.gap_tol = gap_tol
        # target: "optimal" or ("first-feasible-above", threshold)
        self.target = target
        self.node_limit = node_limit


def _is_integral(x, binaries):
    for i in binaries:
        v = x[i]
        if min(v, 1.0 - v) > INT_TOL:
            return False
    return True


def _pick_branch_var(x, binaries):
    best = -1
    best_score = np.inf
    for i in binaries:
        v = x[i]
        if min(v, 1.0 - v) <= INT_TOL:
            continue
        score = abs(v - 0.5)
        if score < best_score - 1e-15:
            best = i
            best_score = score
    return best


def solve_milp(problem, config=None, lazy_cut_hook=None):
    """Solve a MilpProblem. Statuses per Solution; see module docstring.

    With target ("first-feasible-above", t) the search returns the first
    integral incumbent whose objective improves on t (strictly better in the
    problem's sense), substituting speed for proof of optimality. The bound
    field always carries the best proven bound at return time.
    """
    if config is None:
        config = MilpConfig()
    base = problem.base
    sense = base.sense
    sign = 1.0 if sense == "max" else -1.0
    binaries = sorted(problem.binaries)
    t0 = time.monotonic()
    stats = {"nodes": 0, "lp_solves": 0, "cuts": 0, "incumbents": 0}

    constraints = list(base.constraints)
    lp_cache = LpProblem(sense, base.objective, constraints, base.lower, base.upper)

    def rebuild():
        nonlocal lp_cache
        lp_cache = LpProblem(sense, base.objective, constraints, base.lower, base.upper)

    def out_of_time():
        return config.time_limit is not None and time.monotonic() - t0 > config.time_limit

    def elapsed_ms():
        return (time.monotonic() - t0) * 1000.0

    incumbent_x = None
    incumbent_obj = None

    counter = itertools.count()
    # heap entries: (-score, tiebreak, overrides); score = sign * objective bound,
    # so popping the smallest entry gives the best-bound node for either sense.
    heap = [(-np.inf, next(counter), {})]

    def best_open_bound():
        scores = [-entry[0] for entry in heap]
        if incumbent_obj is not None:
            scores.append(sign * incumbent_obj)
        if not scores:
            return None
        return sign * max(scores)

    def finish(status, extra_bound=None):
        stats["time_ms"] = elapsed_ms()
        bound = best_open_bound()
        if extra_bound is not None:
            if bound is None or sign * extra_bound > sign * bound:
                bound = extra_bound
        return Solution(
            status=status,
            objective=incumbent_obj,
            x=incumbent_x,
            bound=bound,
            stats=dict(stats),
        )

    while heap:
        neg_score, _, overrides = heapq.heappop(heap)
        node_score = -neg_score
        if incumbent_obj is not None:
            eps = max(config.gap_tol, config.gap_tol * abs(incumbent_obj))
            if node_score <= sign * incumbent_obj + eps:
                continue  # cannot improve
        if out_of_time():
            heapq.heappush(heap, (neg_score, next(counter), overrides))
            return finish("time-limit")
        if config.node_limit is not None and stats["nodes"] >= config.node_limit:
            heapq.heappush(heap, (neg_score, next(counter), overrides))
            return finish("time-limit")
        stats["nodes"] += 1

        prune = False
        sol = None
        while True:
            sol = solve_lp(lp_cache, overrides)
            stats["lp_solves"] += 1
            if sol.status == "infeasible":
                prune = True
                break
            if sol.status == "unbounded":
                stats["time_ms"] = elapsed_ms()
                return Solution(status="unbounded", stats=dict(stats))
            if incumbent_obj is not None:
                eps = max(config.gap_tol, config.gap_tol * abs(incumbent_obj))
                if sign * sol.objective <= sign * incumbent_obj + eps:
                    prune = True
                    break
            if not _is_integral(sol.x, binaries):
                break
            # integral point
            if lazy_cut_hook is not None:
                try:
                    cuts = lazy_cut_hook(sol.x, sol.objective)
                except AbortSearch:
                    stats["aborted_by_hook"] = True
                    return finish("time-limit", extra_bound=sol.objective)
                if cuts:
                    for c in cuts:
                        if not isinstance(c, LinearConstraint):
                            c = LinearConstraint(*c)
                        constraints.append(c)
                        stats["cuts"] += 1
                    rebuild()
                    if out_of_time():
                        return finish("time-limit", extra_bound=sol.objective)
                    continue  # same node, tightened problem
            # keep as incumbent
            if incumbent_obj is None or sign * sol.objective > sign * incumbent_obj:
                incumbent_obj = sol.objective
                incumbent_x = sol.x
                stats["incumbents"] += 1
            if isinstance(config.target, tuple) and config.target[0] == "first-feasible-above":
                threshold = config.target[1]
                if sign * sol.objective > sign * threshold:
                    return finish("feasible-found")
            prune = True
            break
        if prune:
            continue

        i = _pick_branch_var(sol.x, binaries)
        if i < 0:  # numerically integral after all
            continue
        child_score = sign * sol.objective
        for fix in (0.0, 1.0):
            ov = dict(overrides)
            ov[i] = (fix, fix)
            heapq.heappush(heap, (-child_score, next(counter), ov))

    stats["time_ms"] = elapsed_ms()
    if incumbent_obj is None:
        return Solution(status="infeasible", stats=dict(stats))
    return Solution(
        status="optimal",
        objective=incumbent_obj,
        x=incumbent_x,
        bound=incumbent_obj,
        stats=dict(stats),
    )
