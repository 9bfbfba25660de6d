import numpy as np
import pytest

from reluforge.opt import LinearConstraint, LpBuilder, LpProblem, lp_feasible, solve_lp

from oracles import tableau_simplex

INF = float("inf")


def lp(sense, c, cons, lo, hi):
    rows = [LinearConstraint(np.array(a, dtype=float), rel, rhs) for a, rel, rhs in cons]
    return LpProblem(sense, np.array(c, dtype=float), rows, np.array(lo, dtype=float), np.array(hi, dtype=float))


class TestBasics:
    def test_max_x_upper3(self):
        sol = solve_lp(lp("max", [1.0], [([1.0], "<=", 3.0)], [0.0], [INF]))
        assert sol.status == "optimal"
        assert sol.objective == pytest.approx(3.0)
        assert sol.x[0] == pytest.approx(3.0)

    def test_infeasible(self):
        sol = solve_lp(lp("max", [1.0], [([1.0], ">=", 1.0), ([1.0], "<=", 0.0)], [-INF], [INF]))
        assert sol.status == "infeasible"

    def test_unbounded(self):
        sol = solve_lp(lp("max", [1.0], [], [0.0], [INF]))
        assert sol.status == "unbounded"

    def test_pure_bounds_no_rows(self):
        sol = solve_lp(lp("min", [2.0, -3.0], [], [-1.0, -2.0], [4.0, 5.0]))
        assert sol.status == "optimal"
        assert sol.objective == pytest.approx(2 * -1 + -3 * 5)

    def test_equality_row(self):
        sol = solve_lp(lp("max", [1.0, 1.0], [([1.0, 2.0], "=", 4.0)], [0.0, 0.0], [10.0, 10.0]))
        assert sol.status == "optimal"
        assert sol.objective == pytest.approx(4.0)  # x=(4,0)

    def test_free_variables(self):
        sol = solve_lp(
            lp(
                "min",
                [1.0, 0.0],
                [([1.0, 1.0], ">=", 2.0), ([1.0, -1.0], ">=", -6.0)],
                [-INF, -INF],
                [INF, INF],
            )
        )
        assert sol.status == "optimal"
        assert sol.objective == pytest.approx(-2.0)  # x = (-2, 4)

    def test_fixed_variable(self):
        sol = solve_lp(lp("max", [1.0, 1.0], [([1.0, 1.0], "<=", 5.0)], [2.0, 0.0], [2.0, INF]))
        assert sol.status == "optimal"
        assert sol.objective == pytest.approx(5.0)
        assert sol.x[0] == pytest.approx(2.0)

    def test_negative_rhs_rows(self):
        sol = solve_lp(lp("min", [1.0], [([1.0], ">=", -5.0), ([-1.0], "<=", 3.0)], [-INF], [INF]))
        assert sol.status == "optimal"
        assert sol.objective == pytest.approx(-3.0)

    def test_zero_row_infeasible(self):
        # 0*x <= -1 can never hold
        sol = solve_lp(lp("max", [1.0], [([0.0], "<=", -1.0)], [0.0], [1.0]))
        assert sol.status == "infeasible"

    def test_bound_overrides(self):
        p = lp("max", [1.0, 1.0], [([1.0, 1.0], "<=", 10.0)], [0.0, 0.0], [1.0, 1.0])
        sol = solve_lp(p, bound_overrides={0: (0.0, 0.0)})
        assert sol.objective == pytest.approx(1.0)
        sol = solve_lp(p, bound_overrides={0: (1.0, 1.0), 1: (1.0, 1.0)})
        assert sol.objective == pytest.approx(2.0)

    def test_degenerate_classic_cycle_candidate(self):
        # Beale's cycling example (terminates thanks to the Bland switch)
        p = lp(
            "min",
            [-0.75, 150.0, -0.02, 6.0],
            [
                ([0.25, -60.0, -0.04, 9.0], "<=", 0.0),
                ([0.5, -90.0, -0.02, 3.0], "<=", 0.0),
                ([0.0, 0.0, 1.0, 0.0], "<=", 1.0),
            ],
            [0.0] * 4,
            [INF] * 4,
        )
        sol = solve_lp(p)
        assert sol.status == "optimal"
        assert sol.objective == pytest.approx(-0.05)


class TestRandomAgainstOracles:
    def _random_instance(self, rng, n, m):
        c = rng.normal(size=n)
        cons = []
        for _ in range(m):
            a = rng.normal(size=n)
            rel = rng.choice(["<=", ">=", "="], p=[0.5, 0.35, 0.15])
            rhs = rng.normal() * 2
            cons.append((a, rel, rhs))
        lo = np.where(rng.random(n) < 0.8, rng.uniform(-3, 0, n), -INF)
        hi = np.where(rng.random(n) < 0.8, rng.uniform(0.5, 4, n), INF)
        hi = np.maximum(hi, lo)
        sense = "max" if rng.random() < 0.5 else "min"
        return sense, c, cons, lo, hi

    def test_matches_textbook_oracle(self):
        rng = np.random.default_rng(42)
        checked = 0
        for trial in range(60):
            n = int(rng.integers(2, 9))
            m = int(rng.integers(1, 7))
            sense, c, cons, lo, hi = self._random_instance(rng, n, m)
            # oracle needs finite-ish problems; bound the free directionsa
            lo = np.where(np.isfinite(lo), lo, -50.0)
            hi = np.where(np.isfinite(hi), hi, 50.0)
            sol = solve_lp(lp(sense, c, cons, lo, hi))
            status, val, _ = tableau_simplex(sense, c, cons, lo, hi)
            assert sol.status == status, f"trial {trial}: {sol.status} vs {status}"
            if status == "optimal":
                assert sol.objective == pytest.approx(val, abs=1e-6), f"trial {trial}"
                checked += 1
        assert checked >= 30

    def test_matches_scipy_highs(self):
        scipy_opt = pytest.importorskip("scipy.optimize")
        rng = np.random.default_rng(43)
        for trial in range(60):
            n = int(rng.integers(2, 31))
            m = int(rng.integers(1, 16))
            sense, c, cons, lo, hi = self._random_instance(rng, n, m)
            sol = solve_lp(lp(sense, c, cons, lo, hi))
            A_ub, b_ub, A_eq, b_eq = [], [], [], []
            for a, rel, rhs in cons:
                if rel == "<=":
                    A_ub.append(a)
                    b_ub.append(rhs)
                elif rel == ">=":
                    A_ub.append(-np.asarray(a))
                    b_ub.append(-rhs)
                else:
                    A_eq.append(a)
                    b_eq.append(rhs)
            res = scipy_opt.linprog(
                c if sense == "min" else -np.asarray(c),
                A_ub=np.array(A_ub) if A_ub else None,
                b_ub=np.array(b_ub) if b_ub else None,
                A_eq=np.array(A_eq) if A_eq else None,
                b_eq=np.array(b_eq) if b_eq else None,
                bounds=list(zip(np.where(np.isfinite(lo), lo, None), np.where(np.isfinite(hi), hi, None))),
                method="highs",
            )
            if res.status == 0:
                assert sol.status == "optimal", f"trial {trial}"
                val = res.fun if sense == "min" else -res.fun
                assert sol.objective == pytest.approx(val, abs=1e-6), f"trial {trial}"
            elif res.status == 2:
                assert sol.status == "infeasible", f"trial {trial}"
            elif res.status == 3:
                assert sol.status == "unbounded", f"trial {trial}"

    def test_solutions_satisfy_constraints(self):
        rng = np.random.default_rng(44)
        for _ in range(40):
            n = int(rng.integers(2, 12))
            m = int(rng.integers(1, 8))
            sense, c, cons, lo, hi = self._random_instance(rng, n, m)
            sol = solve_lp(lp(sense, c, cons, lo, hi))
            if sol.status != "optimal":
                continue
            x = sol.x
            scale = 1.0 + float(np.max(np.abs(x)))
            assert np.all(x >= lo - 1e-7 * scale) and np.all(x <= hi + 1e-7 * scale)
            for a, rel, rhs in cons:
                v = float(np.asarray(a) @ x)
                if rel == "<=":
                    assert v <= rhs + 1e-6 * scale
                elif rel == ">=":
                    assert v >= rhs - 1e-6 * scale
                else:
                    assert abs(v - rhs) <= 1e-6 * scale


class TestBuilderAndFeasibility:
    def test_builder_round_trip(self):
        b = LpBuilder()
        x = b.add_var("x", 0.0, 5.0)
        y = b.add_var("y", -1.0, 1.0)
        b.add_constraint({x: 1.0, y: 2.0}, "<=", 4.0)
        b.set_objective("max", {x: 1.0, y: 1.0})
        p = b.build_lp()
        assert p.n_vars == 2
        sol = solve_lp(p)
        assert sol.status == "optimal"
        assert sol.objective == pytest.approx(4.5)  # x=5, y=-0.5 on the row

    def test_lp_feasible(self):
        p = lp("max", [0.0, 0.0], [([1.0, 1.0], "=", 1.0)], [0.0, 0.0], [1.0, 1.0])
        ok, x = lp_feasible(p)
        assert ok and abs(x.sum() - 1.0) < 1e-9
        p2 = lp("max", [0.0], [([1.0], ">=", 2.0)], [0.0], [1.0])
        ok, x = lp_feasible(p2)
        assert not ok and x is None
