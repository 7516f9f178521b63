"""Non-monotonicity threshold, improving deviation, and the lemma verification suite."""

from __future__ import annotations

import math
from fractions import Fraction
from dataclasses import dataclass, field
from typing import Dict, Optional

import numpy as np

from .mechanisms import (
    BINDING,
    IC_TOL,
    SNAP_TOL,
    STRICT,
    VIOLATED,
    VotingMechanism,
    agent_preferred,
    build_lp,
    check_x_J,
    fractional_indices,
    hat_x_J,
    ic_report,
    is_monotone,
    is_responsive,
    principal_preferred,
    w_ratio,
)
from .model import (
    ModelParams,
    conflict_of_interest,
    inverse_likelihood,
    k_J,
    k_P,
    likelihood,
)
from .solver_lp import solve_full, solve_relaxed
from .solver_structured import nonnegative_set_is_interval, solve

PASS = "pass"
FAIL = "fail"
VACUOUS = "vacuous"

FIRST_BEST_TOL = 1e-9
MATCH_TOL = 1e-8
DEFAULT_DELTA = 1e-4
MAX_HALVINGS = 60


class DeltaTooLarge(ValueError):
    def __init__(self, delta, max_delta):
        self.delta = delta
        self.max_delta = max_delta
        super().__init__(
            f"delta={delta:g} leaves the box or breaks IC-a; admissible deltas are below {max_delta:g}"
        )


def nonmonotonicity_threshold(params: ModelParams):
    """Return (t_bar_P, c_prime).

    Any t_P above t_bar_P makes x_hat_J strictly improvable, so responsive
    optima are non-monotone there. t_bar_P is a sufficient bound, not
    necessarily the first t_P at which non-monotonicity appears.
    """
    if not conflict_of_interest(params):
        raise ValueError("the threshold is defined only under a conflict of interest")
    kj = k_J(params)
    m = params.n_plus_1
    pb, tJ = params.p_beta, params.t_J
    L = lambda k: likelihood(params, k)  # noqa: E731
    denom = L(m - 1) - tJ
    c_prime = (
        pb / (1 - pb) * (1 - kj / m) * (L(kj) - tJ) / denom
        - kj / m * (L(kj - 1) - tJ) / denom
    )
    # equals L(m) - (L(m) - L(kj)) / (1 + c'), without the cancellation when c' is tiny
    t_bar = (c_prime * L(m) + L(kj)) / (1 + c_prime)
    return t_bar, c_prime


def _deviation_direction(params: ModelParams, lp):
    """Per-unit-delta change of x_hat_J; keeps IC-b binding."""
    kj, m = k_J(params), params.n_plus_1
    direction = np.zeros(m + 1, dtype=object if params.is_exact else float)
    direction[kj] = -1 / lp.db[kj]
    direction[m] = 1 / lp.db[m]
    return direction


def max_admissible_delta(params: ModelParams) -> float:
    """Supremum of deltas keeping x_hat_J + Delta in the box with IC-a strict."""
    lp = build_lp(params)
    base = hat_x_J(params, lp).probs
    d = _deviation_direction(params, lp)
    bounds = []
    for k in np.flatnonzero([float(v) != 0 for v in d]):
        if d[k] < 0:
            bounds.append(base[k] / -d[k])
        else:
            bounds.append((1 - base[k]) / d[k])
    slope = np.dot(lp.da, d)
    if slope > 0:
        bounds.append(-np.dot(lp.da, base) / slope)
    return float(min(bounds))


def improving_deviation(params: ModelParams, delta: Optional[float] = None) -> VotingMechanism:
    """x_hat_J shifted along the IC-b-preserving direction at tallies k_J and n+1.

    With delta=None the step starts at 1e-4 times min(|db(k_J)|, |db(n+1)|)
    and is halved until the result is a valid mechanism with IC-a strict.
    """
    if not conflict_of_interest(params):
        raise ValueError("the deviation is defined only under a conflict of interest")
    lp = build_lp(params)
    base = hat_x_J(params, lp).probs
    d = _deviation_direction(params, lp)
    kj, m = k_J(params), params.n_plus_1

    def feasible(step):
        y = base + step * d
        if any(p < 0 or p > 1 for p in y):
            return None
        if not np.dot(lp.da, y) < 0:
            return None
        return y

    if delta is not None:
        if delta <= 0:
            raise ValueError("delta must be positive")
        y = feasible(delta)
        if y is None:
            raise DeltaTooLarge(delta, max_admissible_delta(params))
        return VotingMechanism(y)

    step = DEFAULT_DELTA * min(abs(lp.db[kj]), abs(lp.db[m]))
    for _ in range(MAX_HALVINGS + 1):
        y = feasible(step)
        if y is not None:
            return VotingMechanism(y)
        step = step / 2
    raise DeltaTooLarge(step, max_admissible_delta(params))


@dataclass
class LemmaResult:
    status: str
    detail: str = ""
    values: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return self.status != FAIL

    def to_json(self) -> dict:
        return {"pass": self.passed, "status": self.status, "detail": self.detail, "values": self.values}


@dataclass
class TheoryReport:
    conflict: bool
    first_best_achievable: bool
    t_bar_P: Optional[float]
    c_prime: Optional[float]
    lemma_results: Dict[str, LemmaResult]

    @property
    def all_passed(self) -> bool:
        return all(r.passed for r in self.lemma_results.values())

    def to_json(self) -> dict:
        return {
            "conflict": self.conflict,
            "first_best_achievable": self.first_best_achievable,
            "t_bar_P": None if self.t_bar_P is None else float(self.t_bar_P),
            "c_prime": None if self.c_prime is None else float(self.c_prime),
            "lemmas": {name: r.to_json() for name, r in self.lemma_results.items()},
        }


def _ok(cond: bool, detail: str, **values) -> LemmaResult:
    return LemmaResult(PASS if cond else FAIL, detail, values)


def verify_lemmas(params: ModelParams, exact: bool = True) -> TheoryReport:
    """Run the nine structural checks on one instance.

    By default the checks run in rational arithmetic on the exact binary
    value of the parameters, with zero tolerance: the lemmas are sign
    statements, and float slacks of 1e-12 are still slacks.
    """
    params = params.exact(binary=True) if exact else params.inexact()
    mode = "rational" if exact else "float"
    tol = 0 if exact else IC_TOL
    lp = build_lp(params)
    conflict = conflict_of_interest(params)
    kj, kp, m = k_J(params), k_P(params), params.n_plus_1
    results: Dict[str, LemmaResult] = {}
    report = lambda x: ic_report(params, x, lp=lp, tol=tol)  # noqa: E731

    # (1) x_J strictly IC
    rep = report(agent_preferred(params))
    results["1_xJ_strictly_IC"] = _ok(
        rep.verdict_a == STRICT and rep.verdict_b == STRICT,
        f"IC-a {rep.verdict_a}, IC-b {rep.verdict_b}",
        ic_a_lhs=float(rep.ic_a_lhs), ic_b_lhs=float(rep.ic_b_lhs),
    )

    # (2) x_P violates IC-b exactly under conflict
    rep = report(principal_preferred(params))
    violates = rep.verdict_b == VIOLATED
    results["2_xP_IC_b_iff_no_conflict"] = _ok(
        violates == conflict and rep.verdict_a != VIOLATED,
        f"conflict={conflict}, IC-a {rep.verdict_a}, IC-b {rep.verdict_b}",
        ic_a_lhs=float(rep.ic_a_lhs), ic_b_lhs=float(rep.ic_b_lhs),
    )

    # (3) first-best achievable iff no conflict
    full = solve_full(params, mode)
    first_best = np.sum(lp.v[kp:])
    achievable = bool(abs(full.objective - first_best) <= (0 if exact else FIRST_BEST_TOL))
    results["3_first_best_iff_no_conflict"] = _ok(
        achievable == (not conflict),
        f"optimum {float(full.objective):.12g} vs first-best {float(first_best):.12g}",
        optimum=float(full.objective), first_best=float(first_best),
    )

    # (4) IC verdict patterns of x_hat_J and x_check_J
    # with k_J = n+1 (never under conflict) x_hat_J collapses to the zero mechanism
    hat = report(hat_x_J(params, lp))
    chk = report(check_x_J(params, lp))
    want_hat = (BINDING, BINDING) if kj == m else (STRICT, BINDING)
    want_chk = (BINDING, BINDING) if kj == 1 else (BINDING, STRICT)
    results["4_hat_check_xJ_IC"] = _ok(
        (hat.verdict_a, hat.verdict_b) == want_hat
        and (chk.verdict_a, chk.verdict_b) == want_chk,
        f"hat=({hat.verdict_a},{hat.verdict_b}) check=({chk.verdict_a},{chk.verdict_b})",
    )

    # (5) extreme-point fractional counts
    relaxed = solve_relaxed(params, mode)
    counts_r = [len(fractional_indices(x)) for x in relaxed.mechanisms()]
    counts_f = [len(fractional_indices(x)) for x in full.mechanisms()]
    results["5_extreme_point_fractional_count"] = _ok(
        max(counts_r) <= 1 and max(counts_f) <= 2,
        f"relaxed {counts_r}, full {counts_f}",
    )

    # (6) w: sign pattern and strict decrease on both integer branches
    w = [w_ratio(params, k) for k in range(m + 1)]
    signs_ok = all((wk < 0) == (k == kj - 1) and wk != 0 for k, wk in enumerate(w))
    left, right = w[: max(kj - 1, 0)], w[kj:]
    mono_ok = all(u > v for u, v in zip(left, left[1:])) and all(u > v for u, v in zip(right, right[1:]))
    results["6_w_sign_and_monotonicity"] = _ok(
        signs_ok and mono_ok, f"signs_ok={signs_ok}, decreasing={mono_ok}", w=[float(x) for x in w]
    )

    # (7) nonnegative set of the virtual utility is an interval for every grid multiplier
    grid = [Fraction(i, 100) for i in range(1001)] if exact else [i / 100 for i in range(1001)]
    # sign of v + mu*db equals the sign of phi; the product form is the cheap one
    bad = [float(mu) for mu in grid if not nonnegative_set_is_interval(lp.v + mu * lp.db)]
    results["7_virtual_utility_interval"] = _ok(not bad, f"{len(bad)} multipliers break intervality", bad_mu=bad[:5])

    t_bar = c_prime = None
    optimum = solve(params, mode)
    optima = optimum.mechanisms()
    shape_tol = 0 if exact else SNAP_TOL
    if conflict:
        t_bar, c_prime = nonmonotonicity_threshold(params)

    # (8) a monotone responsive optimum equals x_hat_J
    hat_probs = hat_x_J(params, lp).as_float()
    active = [x for x in optima if is_responsive(x, shape_tol) and is_monotone(x, shape_tol)]
    if not conflict or not active:
        results["8_monotone_optimum_is_hat_xJ"] = LemmaResult(VACUOUS, "no monotone responsive optimum")
    else:
        gaps = [float(np.max(np.abs(x.as_float() - hat_probs))) for x in active]
        results["8_monotone_optimum_is_hat_xJ"] = _ok(max(gaps) <= MATCH_TOL, f"max gap {max(gaps):.3g}")

    # (9) above t_bar_P responsive optima are non-monotone
    responsive = [x for x in optima if is_responsive(x, shape_tol)]
    if not conflict or params.t_P < t_bar or not responsive:
        results["9_nonmonotone_above_threshold"] = LemmaResult(
            VACUOUS, "no conflict, t_P below threshold, or zero optimum"
        )
    else:
        mono = [is_monotone(x, shape_tol) for x in responsive]
        results["9_nonmonotone_above_threshold"] = _ok(
            not any(mono), f"t_P={float(params.t_P):.6g} >= t_bar_P={float(t_bar):.6g}",
        )

    return TheoryReport(
        conflict=conflict,
        first_best_achievable=not conflict,
        t_bar_P=t_bar,
        c_prime=c_prime,
        lemma_results=results,
    )


# Randomized instances ------------------------------------------------------

NEAR_INDIFFERENCE = 1e-6


def _near_indifferent(params_like: ModelParams, t: float) -> bool:
    for k in range(params_like.n_plus_1 + 1):
        L = likelihood(params_like, k)
        if abs(t - L) <= NEAR_INDIFFERENCE * L:
            return True
    pre = inverse_likelihood(params_like, t)
    return abs(pre - round(pre)) <= NEAR_INDIFFERENCE


def _log_uniform(rng: np.random.Generator, lo: float, hi: float) -> float:
    return float(math.exp(rng.uniform(math.log(lo), math.log(hi))))


def _base(rng: np.random.Generator):
    n_plus_1 = int(rng.integers(2, 16))
    p_beta = float(rng.uniform(0.05, 0.6))
    p_alpha = float(rng.uniform(p_beta + 0.1, 0.95))
    prior = float(rng.uniform(0.2, 0.8))
    # thresholds are placeholders; only likelihoods are read before they are set
    probe = ModelParams(n_plus_1, prior, p_alpha, p_beta, 1.0, 1.0, check=False)
    return probe


def random_instance(rng: np.random.Generator) -> ModelParams:
    """Valid instance: thresholds log-uniform inside (L(0), L(n+1)), ordered."""
    while True:
        probe = _base(rng)
        lo, hi = likelihood(probe, 0), likelihood(probe, probe.n_plus_1)
        t1, t2 = sorted((_log_uniform(rng, lo, hi), _log_uniform(rng, lo, hi)))
        if _near_indifferent(probe, t1) or _near_indifferent(probe, t2):
            continue
        return probe.with_thresholds(t_P=t2, t_J=t1)


def random_instance_above_threshold(rng: np.random.Generator) -> ModelParams:
    """Conflicted instance with t_P drawn log-uniform in (t_bar_P, L(n+1))."""
    while True:
        params = random_instance(rng)
        if not conflict_of_interest(params):
            continue
        t_bar, _ = nonmonotonicity_threshold(params)
        t_P = _log_uniform(rng, t_bar, likelihood(params, params.n_plus_1))
        if t_P <= t_bar or _near_indifferent(params, t_P):
            continue
        return params.with_thresholds(t_P=t_P)
