"""Dense bounded-variable two-phase revised simplex.

Minimizes internally (max problems are negated on the way in/out). Slack
variables turn every row into an equality; infeasible starting rows get
phase-1 artificials. Pricing is Dantzig with a permanent switch to Bland's
rule after a run of degenerate pivots, which restores the termination
guarantee. The basis inverse is kept explicitly and eta-updated, with a
periodic refactorization to bound drift.
"""

from __future__ import annotations

import numpy as np

from ..exceptions import NumericsError
from . import kernels
from .kernels import AT_LOWER, AT_UPPER, BASIC, FREE
from .problem import LpProblem, Solution

FEAS_TOL = 1e-7
PIVOT_TOL = 1e-11
DEGENERATE_STREAK = 40
REFACTOR_EVERY = 64
INF = np.inf


def _row_cache(problem):
    """Dense row data attached to the problem, rebuilt when rows are appended.

    Callers that mutate constraints only ever append (lazy cuts), so the row
    count is enough to detect staleness.
    """
    cache = getattr(problem, "_simplex_row_cache", None)
    m = len(problem.constraints)
    if cache is not None and cache["rhs"].shape[0] == m:
        return cache
    n = problem.n_vars
    A = np.zeros((m, n))
    rhs = np.empty(m)
    le = np.zeros(m, dtype=bool)
    ge = np.zeros(m, dtype=bool)
    for i, row in enumerate(problem.constraints):
        A[i] = row.coeffs
        rhs[i] = row.rhs
        if row.relation == "<=":
            le[i] = True
        elif row.relation == ">=":
            ge[i] = True
    pos = np.clip(A, 0.0, None)
    neg = np.clip(A, None, 0.0)
    cache = {
        "A": A,
        "rhs": rhs,
        "le": le,
        "ge": ge,
        "eq": ~(le | ge),
        "pos": pos,
        "neg": neg,
        "posm": (pos > 0.0).astype(np.float64),
        "negm": (neg < 0.0).astype(np.float64),
    }
    problem._simplex_row_cache = cache
    return cache


def _live_rows(cache, lb, ub):
    """Mask of rows some point within the bounds could violate.

    An inequality whose worst-case lhs over the bounding box still satisfies
    it constrains nothing and is dropped before standardization; with lazy
    no-good cuts this sheds almost every accumulated cut once branching has
    fixed a variable against it.
    """
    pos, neg = cache["pos"], cache["neg"]
    posm, negm = cache["posm"], cache["negm"]
    lo_inf = (~np.isfinite(lb)).astype(np.float64)
    hi_inf = (~np.isfinite(ub)).astype(np.float64)
    lo_f = np.where(lo_inf > 0, 0.0, lb)
    hi_f = np.where(hi_inf > 0, 0.0, ub)
    keep = cache["eq"].copy()
    le, ge = cache["le"], cache["ge"]
    if le.any():
        top = pos @ hi_f + neg @ lo_f
        unbounded = (posm @ hi_inf + negm @ lo_inf) > 0
        keep |= le & (unbounded | (top > cache["rhs"]))
    if ge.any():
        bot = pos @ lo_f + neg @ hi_f
        unbounded = (posm @ lo_inf + negm @ hi_inf) > 0
        keep |= ge & (unbounded | (bot < cache["rhs"]))
    return keep


def _standardize(problem, bound_overrides=None):
    """Equality form: A_all @ x_all = b with per-variable bounds.

    Columns: structural variables first, then one slack per kept row; rows
    made redundant by the current bounds are omitted entirely.
    Returns (A_all, b, lb, ub, c_min).
    """
    n = problem.n_vars
    struct_lb = np.array(problem.lower, dtype=np.float64)
    struct_ub = np.array(problem.upper, dtype=np.float64)
    if bound_overrides:
        for i, (lo, hi) in bound_overrides.items():
            struct_lb[i] = lo
            struct_ub[i] = hi
    cache = _row_cache(problem)
    keep = _live_rows(cache, struct_lb, struct_ub)
    m = int(keep.sum())
    lb = np.empty(n + m)
    ub = np.empty(n + m)
    lb[:n] = struct_lb
    ub[:n] = struct_ub
    A_all = np.zeros((m, n + m))
    A_all[:, :n] = cache["A"][keep]
    A_all[np.arange(m), n + np.arange(m)] = 1.0
    b = cache["rhs"][keep].copy()
    le, ge = cache["le"][keep], cache["ge"][keep]
    lb[n:] = 0.0
    ub[n:] = 0.0
    ub[n:][le] = INF
    lb[n:][ge] = -INF
    sign = 1.0 if problem.sense == "min" else -1.0
    c_min = np.zeros(n + m)
    c_min[:n] = sign * problem.objective
    return A_all, b, lb, ub, c_min


class _Core:
    """One simplex run over standardized data."""

    def __init__(self, A, b, lb, ub, c):
        self.A = A
        self.b = b
        self.lb = lb
        self.ub = ub
        self.c = c
        self.m, self.n_total = A.shape
        self.stats = {"pivots": 0, "refactors": 0, "phase1_pivots": 0}

    def _refactor(self):
        B = self.A[:, self.basis]
        try:
            self.Binv = np.linalg.inv(B)
        except np.linalg.LinAlgError as exc:
            raise NumericsError("basis matrix became singular") from exc
        self._recompute_xB()
        self.stats["refactors"] += 1

    def _recompute_xB(self):
        v = self.val.copy()
        v[self.basis] = 0.0
        self.xB = self.Binv @ (self.b - self.A @ v)

    def setup(self):
        m, nt = self.m, self.n_total
        lb, ub = self.lb, self.ub
        self.state = np.empty(nt, dtype=np.int8)
        self.val = np.zeros(nt)
        for j in range(nt):
            if lb[j] == -INF and ub[j] == INF:
                self.state[j] = FREE
                self.val[j] = 0.0
            elif lb[j] != -INF:
                self.state[j] = AT_LOWER
                self.val[j] = lb[j]
            else:
                self.state[j] = AT_UPPER
                self.val[j] = ub[j]
        n_struct = nt - m
        self.basis = np.arange(n_struct, n_struct + m)
        self.state[self.basis] = BASIC
        self.allowed = np.ones(nt, dtype=np.uint8)
        self.allowed[lb == ub] = 0  # fixed variables can never move
        self.Binv = np.eye(m)
        self._recompute_xB()

    def _install_artificials(self):
        """Swap out-of-bounds slack basis members for artificials."""
        m = self.m
        need = []
        for i in range(m):
            v = self.xB[i]
            j = self.basis[i]
            if v < self.lb[j] - FEAS_TOL or v > self.ub[j] + FEAS_TOL:
                need.append(i)
        if not need:
            return np.zeros(0, dtype=np.intp)
        na = len(need)
        cols = np.zeros((m, na))
        art_idx = np.arange(self.n_total, self.n_total + na)
        for k, i in enumerate(need):
            j = self.basis[i]
            # park the slack at the bound it violates, artificial absorbs the rest
            if self.xB[i] > self.ub[j]:
                bound = self.ub[j]
                sigma = 1.0
            else:
                bound = self.lb[j]
                sigma = -1.0
            self.state[j] = AT_UPPER if self.xB[i] > self.ub[j] else AT_LOWER
            self.val[j] = bound
            cols[i, k] = sigma
            self.basis[i] = art_idx[k]
        self.A = np.hstack([self.A, cols])
        self.lb = np.concatenate([self.lb, np.zeros(na)])
        self.ub = np.concatenate([self.ub, np.full(na, INF)])
        self.c = np.concatenate([self.c, np.zeros(na)])
        self.val = np.concatenate([self.val, np.zeros(na)])
        state_ext = np.full(na, BASIC, dtype=np.int8)
        self.state = np.concatenate([self.state, state_ext])
        self.allowed = np.concatenate([self.allowed, np.ones(na, dtype=np.uint8)])
        self.n_total += na
        self._refactor()  # artificial columns may be -e_i, basis is no longer I
        return art_idx

    def _iterate(self, costs, max_iter):
        """Run pivots until the phase objective is optimal. Returns status."""
        m = self.m
        use_bland = False
        degen_run = 0
        tol_d = 1e-9 * (1.0 + float(np.max(np.abs(costs))) if costs.size else 1.0)
        lbB = self.lb[self.basis]
        ubB = self.ub[self.basis]
        for _ in range(max_iter):
            cB = costs[self.basis]
            if m:
                y = cB @ self.Binv
                d = costs - y @ self.A
            else:
                d = costs.copy()
            j = kernels.choose_entering(d, self.state, self.allowed, use_bland, tol_d)
            if j < 0:
                return "optimal"
            w = self.Binv @ self.A[:, j] if m else np.zeros(0)
            st = self.state[j]
            if st == AT_LOWER:
                sigma = 1.0
            elif st == AT_UPPER:
                sigma = -1.0
            else:
                sigma = 1.0 if d[j] < 0 else -1.0
            t_own = self.ub[j] - self.lb[j] if st != FREE else INF
            t, r = kernels.ratio_test(
                self.xB, w, lbB, ubB, self.basis, sigma, t_own, use_bland, PIVOT_TOL
            )
            if not np.isfinite(t):
                return "unbounded"
            if t <= 1e-10:
                degen_run += 1
                if degen_run >= DEGENERATE_STREAK:
                    use_bland = True
            else:
                degen_run = 0
            if t != 0.0:
                self.xB -= (sigma * t) * w
            if r < 0:
                # bound flip, basis unchanged
                if st == AT_LOWER:
                    self.state[j] = AT_UPPER
                    self.val[j] = self.ub[j]
                else:
                    self.state[j] = AT_LOWER
                    self.val[j] = self.lb[j]
                continue
            enter_val = self.val[j] + sigma * t
            leaving = self.basis[r]
            if sigma * w[r] > 0:
                self.state[leaving] = AT_LOWER
                self.val[leaving] = self.lb[leaving]
            else:
                self.state[leaving] = AT_UPPER
                self.val[leaving] = self.ub[leaving]
            if abs(w[r]) < PIVOT_TOL:
                raise NumericsError("pivot element below tolerance")
            self.basis[r] = j
            self.state[j] = BASIC
            kernels.eta_update(self.Binv, w, r)
            self.xB[r] = enter_val
            lbB[r] = self.lb[j]
            ubB[r] = self.ub[j]
            self.stats["pivots"] += 1
            if self.stats["pivots"] % REFACTOR_EVERY == 0:
                self._refactor()
                lbB = self.lb[self.basis]
                ubB = self.ub[self.basis]
        raise NumericsError("simplex iteration limit exceeded")

    def drive_out_artificials(self, art_idx):
        """Pivot basic artificials out, or pin redundant rows."""
        art_set = set(int(a) for a in art_idx)
        for r in range(self.m):
            if int(self.basis[r]) not in art_set:
                continue
            u = self.Binv[r, :] @ self.A
            best = -1
            best_mag = PIVOT_TOL
            for j in range(self.n_total):
                if self.state[j] == BASIC or int(j) in art_set:
                    continue
                mag = abs(u[j])
                if mag > best_mag:
                    best = j
                    best_mag = mag
            if best >= 0:
                w = self.Binv @ self.A[:, best]
                leaving = self.basis[r]
                self.state[leaving] = AT_LOWER
                self.val[leaving] = 0.0
                self.basis[r] = best
                self.state[best] = BASIC
                kernels.eta_update(self.Binv, w, r)
                self._recompute_xB()
            # else: redundant row; artificial stays basic pinned at zero

    def solution_vector(self):
        x = self.val.copy()
        x[self.basis] = self.xB
        return x


def solve_lp(problem, bound_overrides=None, max_iter=None):
    """Solve an LpProblem. Statuses: optimal | infeasible | unbounded.

    bound_overrides maps variable index -> (lower, upper), used by
    branch-and-bound to fix binaries without rebuilding the problem.
    Raises NumericsError when pivoting breaks down.
    """
    A, b, lb, ub, c_min = _standardize(problem, bound_overrides)
    n = problem.n_vars
    m = A.shape[0]
    if np.any(lb > ub):
        return Solution(status="infeasible", stats={"pivots": 0})
    if max_iter is None:
        max_iter = 2000 + 200 * (m + A.shape[1])

    core = _Core(A, b, lb, ub, c_min)
    core.setup()
    art_idx = core._install_artificials()
    if art_idx.size:
        phase1_cost = np.zeros(core.n_total)
        phase1_cost[art_idx] = 1.0
        status = core._iterate(phase1_cost, max_iter)
        core.stats["phase1_pivots"] = core.stats["pivots"]
        if status == "unbounded":
            raise NumericsError("phase-1 objective unbounded (should be impossible)")
        x_art = core.solution_vector()[art_idx]
        infeas = float(np.sum(np.abs(x_art)))
        if infeas > FEAS_TOL * (1.0 + float(np.max(np.abs(b))) if m else 1.0):
            return Solution(status="infeasible", stats=dict(core.stats))
        core.drive_out_artificials(art_idx)
        # freeze artificials at zero for phase 2
        for a in art_idx:
            core.lb[a] = 0.0
            core.ub[a] = 0.0
            core.allowed[a] = 0
            if core.state[a] != BASIC:
                core.state[a] = AT_LOWER
                core.val[a] = 0.0
        core._refactor()
    costs = np.zeros(core.n_total)
    costs[: c_min.shape[0]] = c_min
    status = core._iterate(costs, max_iter)
    if status == "unbounded":
        return Solution(status="unbounded", stats=dict(core.stats))
    x_full = core.solution_vector()
    x = x_full[:n]
    # clip float dust so downstream consumers see in-bound values
    np.clip(x, lb[:n], ub[:n], out=x)
    obj = float(problem.objective @ x)
    return Solution(status="optimal", objective=obj, x=x, bound=obj, stats=dict(core.stats))


def lp_feasible(problem, bound_overrides=None):
    """Feasibility-only solve (phase 1). Returns (bool, witness-or-None)."""
    p0 = LpProblem(
        problem.sense,
        problem.objective * 0.0,
        problem.constraints,
        problem.lower,
        problem.upper,
    )
    sol = solve_lp(p0, bound_overrides)
    if sol.status == "optimal":
        return True, sol.x
    return False, None
