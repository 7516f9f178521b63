"""Acceptance criteria 1-9.

Each criterion is a ``check_*`` function returning ``(ok, detail)``. The
pytest wrappers print one PASS/FAIL line per criterion straight to the
terminal; ``python3 tests/test_acceptance.py`` prints the same lines
without pytest.
"""

from __future__ import annotations

import sys
import time
from fractions import Fraction
from functools import lru_cache

import numpy as np
import pytest

from jurymech import (
    ModelParams, agent_preferred, classify, hat_x_J, ic_report, improving_deviation, is_monotone,
    is_responsive, nonmonotonicity_threshold, principal_payoff, principal_preferred, solve, solve_full,
    symmetrize, verify_lemmas,
)
from jurymech.cli import dumps
from jurymech.game import SimConfig, deviation_gains, direct_mechanism_payoff, expected_payoffs, simulate
from jurymech.mechanisms import check_x_J
from jurymech.model import k_J, k_P
from jurymech.theory import FAIL, random_instance, random_instance_above_threshold

F = Fraction
SEED = 2024
SEED_ABOVE = 99
N_RANDOM = 100
N_ABOVE = 50


def f2(exact=False):
    if exact:
        return ModelParams(2, F(1, 2), F(2, 3), F(1, 3), F(3, 2), F(1, 2))
    return ModelParams(2, 0.5, 2 / 3, 1 / 3, 1.5, 0.5)


def f9(exact=False):
    if exact:
        return ModelParams(9, F(1, 2), F(2, 3), F(1, 3), F(1), F(1, 20))
    return ModelParams(9, 0.5, 2 / 3, 1 / 3, 1.0, 0.05)


@lru_cache(maxsize=None)
def random_instances():
    rng = np.random.default_rng(SEED)
    return tuple(random_instance(rng) for _ in range(N_RANDOM))


@lru_cache(maxsize=None)
def instances_above_threshold():
    rng = np.random.default_rng(SEED_ABOVE)
    return tuple(random_instance_above_threshold(rng) for _ in range(N_ABOVE))


@lru_cache(maxsize=None)
def solved():
    """(params, structured result, simplex result, seconds spent) for the random set."""
    start = time.perf_counter()
    out = [(p, solve(p), solve_full(p)) for p in random_instances()]
    return out, time.perf_counter() - start


# Criteria ------------------------------------------------------------------

def check_1():
    target = [0, F(1, 2), 1]
    errors = []
    for name, fn in (("structured", solve), ("simplex", solve_full)):
        ex = fn(f2(exact=True), mode="rational")
        if list(ex.x) != target or ex.objective != F(1, 6):
            errors.append(f"{name} rational: x={list(ex.x)} obj={ex.objective}")
        fl = fn(f2())
        x_err = float(np.max(np.abs(fl.x.as_float() - np.array([0, 0.5, 1]))))
        obj_err = abs(fl.objective - 1 / 6)
        if x_err >= 1e-10 or obj_err >= 1e-10:
            errors.append(f"{name} float: x_err={x_err:.2e} obj_err={obj_err:.2e}")
    return not errors, "; ".join(errors) or "x=(0, 1/2, 1), objective 1/6 exact and within 1e-10 in float"


def check_2():
    p, pe = f9(), f9(exact=True)
    problems = []
    if (k_J(p), k_P(p)) != (3, 5):
        problems.append(f"cutoffs {(k_J(p), k_P(p))}")
    hat3 = hat_x_J(pe)[3]
    if hat3 != F(4, 5):
        problems.append(f"hat x_J(3)={hat3}")
    t_bar, _ = nonmonotonicity_threshold(p)
    if abs(t_bar - 0.24999) > 1e-4:
        problems.append(f"t_bar={t_bar}")
    x = solve(p).x
    shape = classify(x)
    if shape is None or shape.is_zero or not is_responsive(x):
        problems.append("optimum is not a responsive interval mechanism")
    elif not (x[9] < 1 - 1e-9 or shape.upper < 9):
        problems.append("optimum reaches n+1 with probability 1")
    detail = f"k_J=3, k_P=5, hat x_J(3)=4/5, t_bar={t_bar:.6f}, optimum {np.round(x.as_float(), 4).tolist()}"
    return not problems, "; ".join(problems) or detail


def check_3():
    results, seconds = solved()
    gap = max(abs(s.objective - l.objective) for _, s, l in results)
    infeasible = sum(not ic_report(p, s.x, tol=1e-9).feasible(1e-9) for p, s, _ in results)
    ok = gap < 1e-8 and infeasible == 0 and seconds < 10
    return ok, f"max gap {gap:.2e}, infeasible {infeasible}, {seconds:.2f}s for {N_RANDOM} instances"


def check_4():
    results, _ = solved()
    bad = []
    for i, (p, s, l) in enumerate(results):
        for res in (s, l):
            for x in res.mechanisms():
                shape = classify(x)
                if shape is None:
                    bad.append(f"#{i} not an interval")
                elif not shape.is_zero and not (k_J(p) <= shape.lower <= k_P(p) <= shape.upper):
                    bad.append(f"#{i} bounds {shape.lower}..{shape.upper}")
    return not bad, "; ".join(bad[:5]) or "all optima Zero or Interval with k_J <= lo <= k_P <= hi"


def check_5():
    active = violations = 0
    for p in instances_above_threshold():
        for res in (solve(p), solve_full(p)):
            for x in res.mechanisms():
                if not is_responsive(x):
                    continue
                active += 1
                violations += is_monotone(x)
    ok = violations == 0 and active >= 10
    return ok, f"{active} non-vacuous responsive optima, {violations} monotone"


LEMMAS_1_TO_7 = (
    "1_xJ_strictly_IC", "2_xP_IC_b_iff_no_conflict", "3_first_best_iff_no_conflict", "4_hat_check_xJ_IC",
    "5_extreme_point_fractional_count", "6_w_sign_and_monotonicity", "7_virtual_utility_interval",
)


def check_6():
    failures = []
    for i, p in enumerate(random_instances()):
        rep = verify_lemmas(p)
        failures += [f"#{i} {name}" for name in LEMMAS_1_TO_7 if rep.lemma_results[name].status == FAIL]
    return not failures, "; ".join(failures[:5]) or f"checks 1-7 pass on {N_RANDOM} instances"


def _deviation_gain(p):
    ex = p.exact(binary=True)
    y = improving_deviation(ex)
    return principal_payoff(ex, y)[0] - principal_payoff(ex, hat_x_J(ex))[0]


def check_7():
    counted, bad = 0, []
    for i, p in enumerate(instances_above_threshold()):
        if k_J(p) == p.n_plus_1:
            continue
        # skip knife-edge instances where the zero mechanism ties with the optimum
        if solve(p).status == "Degenerate-tie":
            continue
        counted += 1
        if not _deviation_gain(p) > 0:
            bad.append(f"#{i}")
    f2_gain = _deviation_gain(f2())
    ok = not bad and f2_gain < 0 and counted > 0
    return ok, f"{counted} instances improved (failures: {bad or 'none'}); F2 change {float(f2_gain):.3e}"


def _random_mechanism(rng, p):
    kind = rng.integers(4)
    if kind == 0:
        return rng.random(p.n_plus_1 + 1)
    if kind == 1:
        return rng.integers(0, 2, p.n_plus_1 + 1).astype(float)
    return [agent_preferred, principal_preferred, hat_x_J if kind == 2 else check_x_J][rng.integers(3)](p)


def _sign_matches(gain, lhs, scale):
    """Gains are positive rescalings of the slacks, so raw signs must agree.

    Values at roundoff level relative to the summed terms count as zero.
    """
    if abs(lhs) <= 1e-12 * scale:
        return abs(gain) <= 1e-12
    return np.sign(gain) == np.sign(lhs)


def check_8():
    rng = np.random.default_rng(SEED + 8)
    mismatches = 0
    for _ in range(1000):
        p = random_instance(rng)
        x = _random_mechanism(rng, p)
        rep = ic_report(p, x)
        ga, gb = deviation_gains(p, x)
        mismatches += not (
            _sign_matches(ga, -rep.ic_a_lhs, rep.scale_a) and _sign_matches(gb, rep.ic_b_lhs, rep.scale_b)
        )
    mc = []
    for name, p in (("F2", f2()), ("F9", f9())):
        x = solve(p).x
        exact = expected_payoffs(p, x)[0]
        cfg = SimConfig(10 ** 6, seed=42)
        first, second = simulate(p, x, config=cfg), simulate(p, x, config=cfg)
        z = abs(first.principal_mean - exact) / first.principal_se
        same = dumps(first.to_json()) == dumps(second.to_json())
        mc.append((name, z, same))
    ok = mismatches == 0 and all(z < 4 and same for _, z, same in mc)
    mc_text = ", ".join(f"{n} |z|={z:.2f}{'' if same else ' NOT reproducible'}" for n, z, same in mc)
    return ok, f"{mismatches} sign mismatches in 1000 pairs; {mc_text}"


def check_9():
    rng = np.random.default_rng(SEED + 9)
    worst = 0.0
    for _ in range(20):
        p = random_instance(rng)
        while p.n_plus_1 > 10:
            p = random_instance(rng)
        table = rng.random(2 ** p.n_plus_1)
        direct = direct_mechanism_payoff(p, table)
        via_tally = expected_payoffs(p, symmetrize(table, p))[0]
        worst = max(worst, abs(direct - via_tally) / max(abs(direct), 1e-300))
    return worst < 1e-12, f"worst relative payoff difference {worst:.2e}"


CRITERIA = {
    1: ("F2 fixture optimum", check_1),
    2: ("F9 fixture cutoffs, threshold and non-monotone optimum", check_2),
    3: ("structured solver matches simplex", check_3),
    4: ("optima are interval mechanisms", check_4),
    5: ("non-monotone above the threshold", check_5),
    6: ("lemma suite checks 1-7", check_6),
    7: ("deviation certificate", check_7),
    8: ("game layer consistency", check_8),
    9: ("symmetrization preserves payoff", check_9),
}


def _line(number, ok, detail):
    name = CRITERIA[number][0]
    return f"[{'PASS' if ok else 'FAIL'}] criterion {number}: {name} ({detail})"


@pytest.mark.parametrize("number", sorted(CRITERIA))
def test_criterion(number, capsys):
    ok, detail = CRITERIA[number][1]()
    with capsys.disabled():
        print("\n" + _line(number, ok, detail))
    assert ok, detail


if __name__ == "__main__":
    all_ok = True
    for number, (_, fn) in CRITERIA.items():
        ok, detail = fn()
        all_ok &= ok
        print(_line(number, ok, detail))
    sys.exit(0 if all_ok else 1)
