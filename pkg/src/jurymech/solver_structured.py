"""Interval-mechanism solver.

The optimum of the principal's problem is attained by the zero mechanism or
by an interval mechanism whose IC-b constraint binds, with at most one
boundary tally randomized. The solver enumerates exactly that family over
implementation boundaries k_J <= lo <= k_P <= hi <= n+1, adds every
integral interval mechanism, and keeps the best IC-feasible candidate.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

import numpy as np

from .mechanisms import (
    BINDING,
    IC_TOL,
    LPInstance,
    VotingMechanism,
    build_lp,
    classify,
    fractional_indices,
    ic_report,
    principal_preferred,
)
from .model import ModelParams, conflict_of_interest, k_J, k_P, likelihood
from .solver_lp import DEGENERATE_TIE, OPTIMAL, SolveResult

TIE_TOL = 1e-10
DIVISOR_TOL = 1e-12


@dataclass(frozen=True)
class VirtualUtility:
    mu: float
    values: np.ndarray
    phi: np.ndarray
    m_alpha: float
    m_beta: float


def virtual_utility(params: ModelParams, mu, lp: Optional[LPInstance] = None) -> VirtualUtility:
    """Lagrangian objective v(k) + mu (b(k) - b(k-1)) and its normalized form phi(k).

    phi is evaluated from its closed form in L(k) and the expected signal
    counts m_w = p_w (n+1), not by dividing ``values``; the two agree up to
    the positive factor Bin_b(k, n+1).
    """
    if mu < 0:
        raise ValueError("the multiplier must be nonnegative")
    lp = lp or build_lp(params)
    values = lp.v + mu * lp.db
    m_alpha = params.p_alpha * params.n_plus_1
    m_beta = params.p_beta * params.n_plus_1
    phi = []
    for k in range(params.n_plus_1 + 1):
        L = likelihood(params, k)
        phi.append(
            (1 + mu * (1 - k / m_alpha)) * L - (params.t_P + mu * params.t_J * (1 - k / m_beta))
        )
    phi = np.array(phi, dtype=object if params.is_exact else float)
    return VirtualUtility(mu, values, phi, m_alpha, m_beta)


def nonnegative_set_is_interval(values) -> bool:
    """True when {k : values[k] >= 0} is a (possibly empty) run of consecutive tallies."""
    idx = [k for k, val in enumerate(values) if val >= 0]
    return not idx or idx[-1] - idx[0] + 1 == len(idx)


def boundary_probability(params: ModelParams, lo: int, hi: int, which: str,
                         lp: Optional[LPInstance] = None):
    """Boundary probability that makes IC-b bind for the interval [lo, hi].

    which="lower": interior and upper boundary at one, solve
        b(hi) = x b(lo-1) + (1-x) b(lo).
    which="upper": lower boundary and interior at one, solve
        x b(hi) + (1-x) b(hi-1) = b(lo-1).
    Returns None when the solution lies outside (0, 1] or the divisor vanishes.
    """
    lp = lp or build_lp(params)
    b = lambda k: lp.b[k] if k >= 0 else 0 * lp.b[0]  # noqa: E731
    if which == "lower":
        num, den = b(hi) - b(lo), b(lo - 1) - b(lo)
    elif which == "upper":
        num, den = b(lo - 1) - b(hi - 1), b(hi) - b(hi - 1)
    else:
        raise ValueError(f"which must be 'lower' or 'upper', got {which!r}")
    if den == 0 or (not params.is_exact and abs(den) <= DIVISOR_TOL):
        return None
    x = num / den
    if not 0 < x <= 1:
        return None
    return x


def interval_mechanism(params: ModelParams, lo: int, hi: int, lower_prob=1, upper_prob=1) -> VotingMechanism:
    exact = params.is_exact
    zero, one = (Fraction(0), Fraction(1)) if exact else (0.0, 1.0)
    probs = np.empty(params.n_plus_1 + 1, dtype=object if exact else float)
    for k in range(len(probs)):
        probs[k] = one if lo <= k <= hi else zero
    probs[lo] = lower_prob if exact else float(lower_prob)
    if hi != lo:
        probs[hi] = upper_prob if exact else float(upper_prob)
    return VotingMechanism(probs)


def lemma_interval_ic_a_check(params: ModelParams, candidate, lp: Optional[LPInstance] = None,
                              tol: float = IC_TOL) -> bool:
    """Check that an IC-b-binding interval mechanism of the lemma's shape satisfies IC-a.

    The lemma predicts IC-a for (i) x(lo) = 1 with lo > k_J, or (ii) x(hi) = 1
    with lo >= k_J. The return value is the direct evaluation of IC-a, so
    True means theory and computation agree. Raises ValueError when the
    candidate does not meet the lemma's hypotheses.
    """
    lp = lp or build_lp(params)
    shape = classify(candidate)
    if shape is None or shape.is_zero:
        raise ValueError("candidate must be a nonzero interval mechanism")
    report = ic_report(params, candidate, lp=lp, tol=tol)
    if report.verdict_b != BINDING:
        raise ValueError("candidate must satisfy IC-b at equality")
    kj = k_J(params)
    case_i = shape.lower_prob == 1.0 and shape.lower > kj
    case_ii = shape.upper_prob == 1.0 and shape.lower >= kj
    if not (case_i or case_ii):
        raise ValueError("candidate shape is outside the lemma's cases")
    return report.ic_a_lhs <= tol


def _candidates(params: ModelParams, lp: LPInstance):
    n1 = params.n_plus_1
    kj, kp = k_J(params), k_P(params)
    for lo in range(kj, kp + 1):
        for hi in range(max(lo, kp), n1 + 1):
            x_lo = boundary_probability(params, lo, hi, "lower", lp)
            if x_lo is not None and x_lo != 1:
                yield interval_mechanism(params, lo, hi, lower_prob=x_lo)
            x_hi = boundary_probability(params, lo, hi, "upper", lp)
            if x_hi is not None and x_hi != 1:
                yield interval_mechanism(params, lo, hi, upper_prob=x_hi)
    # integral intervals anywhere, including x_J and x = 1
    for lo in range(n1 + 1):
        for hi in range(lo, n1 + 1):
            yield interval_mechanism(params, lo, hi)


def solve(params: ModelParams, mode: str = "float") -> SolveResult:
    """Optimal mechanism by enumeration of interval candidates."""
    if mode not in ("float", "rational"):
        raise ValueError(f"mode must be 'float' or 'rational', got {mode!r}")
    exact = mode == "rational"
    inst = params.exact() if exact else params.inexact()
    lp = build_lp(inst)
    tol = 0 if exact else IC_TOL
    tie_tol = 0 if exact else TIE_TOL

    if not conflict_of_interest(inst):
        return _result(inst, principal_preferred(inst), lp, tol, [])

    zero = interval_mechanism(inst, 0, 0, lower_prob=0)
    best, best_val = None, None
    for cand in _candidates(inst, lp):
        rep = ic_report(inst, cand, lp=lp, tol=tol)
        if not rep.feasible(tol):
            continue
        val = np.dot(lp.v, cand.probs)
        if best is None or val > best_val + tie_tol:
            best, best_val = cand, val

    if best is None or best_val < -tie_tol:
        return _result(inst, zero, lp, tol, [])
    if abs(best_val) <= tie_tol:
        return _result(inst, best, lp, tol, [zero])
    return _result(inst, best, lp, tol, [])


def _result(inst, x, lp, tol, alternatives) -> SolveResult:
    rep = ic_report(inst, x, lp=lp, tol=tol)
    return SolveResult(
        x=x,
        objective=np.dot(lp.v, x.probs),
        binding_a=rep.verdict_a == BINDING,
        binding_b=rep.verdict_b == BINDING,
        fractional_indices=fractional_indices(x),
        status=DEGENERATE_TIE if alternatives else OPTIMAL,
        alternatives=alternatives,
        solver="structured",
    )
