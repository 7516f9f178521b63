from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from jurymech import ModelParams, build_lp, ic_report, solve_full, solve_relaxed
from jurymech.mechanisms import fractional_indices
from jurymech.solver_lp import DEGENERATE_TIE, OPTIMAL
from jurymech.theory import random_instance

from conftest import F2_ARGS, exact_args


def test_f2_rational(f2_exact):
    res = solve_full(f2_exact, mode="rational")
    assert list(res.x) == [0, Fraction(1, 2), 1]
    assert res.objective == Fraction(1, 6)
    assert res.binding_b and not res.binding_a and res.status == OPTIMAL


def test_f2_float(f2):
    res = solve_full(f2)
    np.testing.assert_allclose(res.x.as_float(), [0, 0.5, 1], atol=1e-12)
    assert abs(res.objective - 1 / 6) < 1e-10


def test_f2_relaxed(f2):
    res = solve_relaxed(f2)
    np.testing.assert_allclose(res.x.as_float(), [0, 0.5, 1], atol=1e-12)


def test_tie_at_threshold_two():
    res = solve_full(ModelParams(**{**exact_args(F2_ARGS), "t_P": Fraction(2)}, check=False), mode="rational")
    assert res.status == DEGENERATE_TIE
    assert res.objective == 0
    assert [list(m) for m in res.mechanisms()] == [[0, Fraction(1, 2), 1], [0, 0, 0]]


def test_zero_optimal_at_threshold_three():
    res = solve_full(ModelParams(**{**exact_args(F2_ARGS), "t_P": Fraction(3)}), mode="rational")
    assert list(res.x) == [0, 0, 0] and res.status == OPTIMAL


def test_f9_rational_optimum(f9_exact):
    res = solve_full(f9_exact, mode="rational")
    assert list(res.x) == [0, 0, 0, 0, 1, 1, 1, 1, Fraction(2512, 2555), 0]
    assert res.objective == Fraction(9722224, 16763355)


def test_no_conflict_first_best():
    p = ModelParams(**{**F2_ARGS, "t_P": 0.9})
    res = solve_full(p)
    np.testing.assert_allclose(res.x.as_float(), [0, 1, 1])


def test_bad_mode(f2):
    with pytest.raises(ValueError):
        solve_full(f2, mode="decimal")


def test_json_shape(f2):
    out = solve_full(f2).to_json()
    assert list(out) == ["x", "objective", "binding_a", "binding_b", "status"]


def _brute_force_vertex_bound(params):
    # The optimum of a box LP with two rows is attained at a vertex with at most
    # two fractional coordinates; enumerate pairs and solve the 2x2 system.
    lp = build_lp(params)
    m = lp.size
    best = -np.inf
    rows = np.vstack([lp.da, -lp.db])
    import itertools
    for assign in itertools.product((0.0, 1.0), repeat=m):
        x = np.array(assign)
        if (rows @ x <= 1e-12).all():
            best = max(best, lp.v @ x)
    for i, j in itertools.combinations(range(m), 2):
        for assign in itertools.product((0.0, 1.0), repeat=m - 2):
            rest = np.array(assign)
            idx = [k for k in range(m) if k not in (i, j)]
            A = rows[:, [i, j]]
            rhs = -rows[:, idx] @ rest
            for active in ([0, 1], [0], [1]):
                try:
                    if len(active) == 2:
                        sol = np.linalg.solve(A, rhs)
                        cand = [sol]
                    else:
                        r = active[0]
                        cand = []
                        for fixed_pos, free_pos in ((0, 1), (1, 0)):
                            for val in (0.0, 1.0):
                                if abs(A[r, free_pos]) < 1e-14:
                                    continue
                                s = np.empty(2)
                                s[fixed_pos] = val
                                s[free_pos] = (rhs[r] - A[r, fixed_pos] * val) / A[r, free_pos]
                                cand.append(s)
                except np.linalg.LinAlgError:
                    continue
                for sol in cand:
                    if (sol < -1e-12).any() or (sol > 1 + 1e-12).any():
                        continue
                    x = np.zeros(m)
                    x[idx] = rest
                    x[[i, j]] = np.clip(sol, 0, 1)
                    if (rows @ x <= 1e-10).all():
                        best = max(best, lp.v @ x)
    return best


@pytest.mark.parametrize("seed", range(6))
def test_matches_vertex_enumeration(seed):
    rng = np.random.default_rng(seed)
    p = random_instance(rng)
    while p.n_plus_1 > 6:
        p = random_instance(rng)
    res = solve_full(p)
    assert res.objective == pytest.approx(_brute_force_vertex_bound(p), abs=1e-9)


def test_wide_coefficient_range_reaches_optimum():
    # objective coefficients span 15 orders of magnitude; a tolerance tied to
    # the largest one used to stop 40 units short of the optimum
    p = ModelParams(14, 0.31426471419823115, 0.9314280514585487, 0.053254533437043866,
                    949413571102191.1, 5.174952543063866e-13)
    assert solve_full(p).objective == pytest.approx(0.0, abs=1e-9)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2 ** 32 - 1))
def test_solution_feasible_and_extreme(seed):
    p = random_instance(np.random.default_rng(seed))
    res = solve_full(p)
    rep = ic_report(p, res.x)
    assert rep.feasible()
    assert len(fractional_indices(res.x)) <= 2
    assert len(fractional_indices(solve_relaxed(p).x)) <= 1


@settings(max_examples=10, deadline=None)
@given(st.integers(0, 2 ** 32 - 1))
def test_rational_and_float_agree(seed):
    p = random_instance(np.random.default_rng(seed))
    if p.n_plus_1 > 8:
        return
    ex = solve_full(p.exact(binary=True), mode="rational")
    fl = solve_full(p)
    assert float(ex.objective) == pytest.approx(fl.objective, abs=1e-9)
