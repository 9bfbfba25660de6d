"""LP/MILP problem containers and a small incremental builder."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..exceptions import DimensionMismatchError, NonFiniteValueError

RELATIONS = ("<=", ">=", "=")
INF = float("inf")


@dataclass(frozen=True, eq=False)
class LinearConstraint:
    coeffs: np.ndarray
    relation: str
    rhs: float

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=np.float64)
        if c.ndim != 1:
            raise DimensionMismatchError("constraint coefficients must be a vector")
        if not np.all(np.isfinite(c)):
            raise NonFiniteValueError("constraint coefficients must be finite")
        if self.relation not in RELATIONS:
            raise DimensionMismatchError(f"unknown relation {self.relation!r}")
        r = float(self.rhs)
        if not np.isfinite(r):
            raise NonFiniteValueError("constraint rhs must be finite")
        object.__setattr__(self, "coeffs", c)
        object.__setattr__(self, "rhs", r)


@dataclass(eq=False)
class LpProblem:
    """max/min c'x subject to row constraints and per-variable bounds."""

    sense: str
    objective: np.ndarray
    constraints: list
    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        if self.sense not in ("max", "min"):
            raise DimensionMismatchError("sense must be 'max' or 'min'")
        c = np.asarray(self.objective, dtype=np.float64)
        lo = np.asarray(self.lower, dtype=np.float64)
        up = np.asarray(self.upper, dtype=np.float64)
        n = c.shape[0]
        if lo.shape[0] != n or up.shape[0] != n:
            raise DimensionMismatchError("objective/bounds length mismatch")
        if not np.all(np.isfinite(c)):
            raise NonFiniteValueError("objective must be finite")
        if np.any(np.isnan(lo)) or np.any(np.isnan(up)):
            raise NonFiniteValueError("bounds must not be NaN")
        if np.any(lo > up):
            raise DimensionMismatchError("variable with lower > upper")
        for row in self.constraints:
            if row.coeffs.shape[0] != n:
                raise DimensionMismatchError("constraint length differs from objective")
        self.objective = c
        self.lower = lo
        self.upper = up

    @property
    def n_vars(self):
        return self.objective.shape[0]


@dataclass(eq=False)
class MilpProblem:
    base: LpProblem
    binaries: frozenset

    def __post_init__(self):
        idx = frozenset(int(i) for i in self.binaries)
        n = self.base.n_vars
        for i in idx:
            if i < 0 or i >= n:
                raise DimensionMismatchError(f"binary index {i} out of range")
            if self.base.lower[i] < 0.0 or self.base.upper[i] > 1.0:
                raise DimensionMismatchError(f"binary variable {i} has bounds outside [0,1]")
        self.binaries = idx


@dataclass
class Solution:
    """Solver result. bound is the best proven objective bound (for the
    problem's sense); for status=optimal it coincides with the objective."""

    status: str
    objective: float | None = None
    x: np.ndarray | None = None
    bound: float | None = None
    stats: dict = field(default_factory=dict)

    @property
    def is_feasible_point(self):
        return self.status in ("optimal", "feasible-found") and self.x is not None


class LpBuilder:
    """Incremental construction with named variables.

    Variables get integer indices in creation order; constraints are sparse
    dicts over those indices. build() produces an immutable-enough LpProblem.
    """

    def __init__(self):
        self._names = {}
        self._lower = []
        self._upper = []
        self._rows = []
        self._objective = {}
        self._sense = "max"
        self._binaries = set()

    def add_var(self, name, lb=-INF, ub=INF, binary=False):
        if name in self._names:
            raise DimensionMismatchError(f"duplicate variable {name!r}")
        idx = len(self._lower)
        self._names[name] = idx
        self._lower.append(float(lb))
        self._upper.append(float(ub))
        if binary:
            self._binaries.add(idx)
        return idx

    def __getitem__(self, name):
        return self._names[name]

    def __contains__(self, name):
        return name in self._names

    @property
    def names(self):
        return dict(self._names)

    @property
    def n_vars(self):
        return len(self._lower)

    def add_constraint(self, coeffs, relation, rhs):
        """coeffs: dict var-index -> coefficient."""
        self._rows.append((dict(coeffs), relation, float(rhs)))

    def set_objective(self, sense, coeffs):
        self._sense = sense
        self._objective = dict(coeffs)

    def build_lp(self):
        n = self.n_vars
        obj = np.zeros(n)
        for i, v in self._objective.items():
            obj[i] = v
        cons = []
        for coeffs, rel, rhs in self._rows:
            row = np.zeros(n)
            for i, v in coeffs.items():
                row[i] = v
            cons.append(LinearConstraint(row, rel, rhs))
        return LpProblem(self._sense, obj, cons, np.array(self._lower), np.array(self._upper))

    def build_milp(self):
        return MilpProblem(self.build_lp(), frozenset(self._binaries))
