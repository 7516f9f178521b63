"""Generic bounded-variable simplex for the tally-space LP, in float or exact rational arithmetic.

This is the independent oracle: it knows nothing about interval structure
and simply optimizes over the box [0, 1]^(n+2) cut by the incentive rows.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import List, Sequence

import numpy as np

from .mechanisms import (
    BINDING,
    IC_TOL,
    SNAP_TOL,
    VotingMechanism,
    build_lp,
    fractional_indices,
    ic_report,
)
from .model import ModelParams

OPTIMAL = "Optimal"
DEGENERATE_TIE = "Degenerate-tie"

FEAS_TOL = 1e-9
OPT_TOL = 1e-12  # relative to the magnitude of the terms in each reduced cost
PIVOT_TOL = 1e-12
MAX_ITER = 10_000


@dataclass
class SolveResult:
    x: VotingMechanism
    objective: float
    binding_a: bool
    binding_b: bool
    fractional_indices: List[int]
    status: str = OPTIMAL
    alternatives: List[VotingMechanism] = field(default_factory=list)
    solver: str = ""

    @property
    def objective_v_units(self):
        return self.objective

    def mechanisms(self) -> List[VotingMechanism]:
        """The reported optimum followed by any tied representatives."""
        return [self.x, *self.alternatives]

    def to_json(self) -> dict:
        out = {
            "x": [float(p) for p in self.x],
            "objective": float(self.objective),
            "binding_a": self.binding_a,
            "binding_b": self.binding_b,
            "status": self.status,
        }
        if self.alternatives:
            out["alternatives"] = [[float(p) for p in alt] for alt in self.alternatives]
        return out


class _Tableau:
    """Dense simplex tableau for  max c.x  s.t.  A x + s = 0,  0 <= x <= u,  s >= 0.

    Nonbasic variables sit at one of their bounds. Slacks have no upper
    bound. Entering and leaving choices follow Bland's smallest-index rule.
    """

    def __init__(self, rows, upper, exact: bool):
        self.exact = exact
        self.zero = Fraction(0) if exact else 0.0
        self.pivot_tol = 0 if exact else PIVOT_TOL
        m, nx = len(rows), len(upper)
        self.m, self.nx = m, nx
        width = nx + m
        self.T = [
            [self._num(c) for c in row] + [self._num(int(i == j)) for j in range(m)]
            for i, row in enumerate(rows)
        ]
        self.upper = [self._num(u) for u in upper] + [None] * m
        self.basis = [nx + i for i in range(m)]
        self.at_upper = [False] * width
        self.values = [self.zero] * m  # rhs is zero and all x start at 0

    def _num(self, c):
        return Fraction(c) if self.exact else float(c)

    def reduced_costs(self, c):
        """Reduced costs and, in float mode, a per-entry rounding tolerance."""
        width = self.nx + self.m
        cost = [self._num(cj) for cj in c] + [self.zero] * self.m
        d = list(cost)
        scale = [abs(v) for v in cost]
        for i, bi in enumerate(self.basis):
            cb = cost[bi]
            if cb:
                row = self.T[i]
                for j in range(width):
                    d[j] -= cb * row[j]
                    scale[j] += abs(cb * row[j])
        if self.exact:
            return d, [0] * width
        return d, [OPT_TOL * s for s in scale]

    def run(self, c, frozen: Sequence) -> None:
        """Optimize c while keeping every objective in ``frozen`` at its current value."""
        width = self.nx + self.m
        for _ in range(MAX_ITER):
            d, tol = self.reduced_costs(c)
            locked = [self.reduced_costs(f) for f in frozen]
            basic = set(self.basis)
            entering = None
            for j in range(width):
                if j in basic:
                    continue
                if any(abs(dl[j]) > tl[j] for dl, tl in locked):
                    continue
                sigma = -1 if self.at_upper[j] else 1
                if sigma * d[j] > tol[j]:
                    entering, direction = j, sigma
                    break
            if entering is None:
                return
            self._move(entering, direction)
        raise RuntimeError("simplex iteration limit reached")

    def _move(self, j: int, sigma: int) -> None:
        # basic value i changes by -sigma * t * T[i][j]
        best_t, leave_row, leave_to_upper = None, None, False
        if self.upper[j] is not None:
            best_t = self.upper[j]
        for i, bi in enumerate(self.basis):
            rate = sigma * self.T[i][j]
            if rate > self.pivot_tol:
                t = self.values[i] / rate
                to_upper = False
            elif rate < -self.pivot_tol and self.upper[bi] is not None:
                t = (self.upper[bi] - self.values[i]) / (-rate)
                to_upper = True
            else:
                continue
            if not self.exact and t < 0:
                t = 0.0
            if (
                best_t is None
                or t < best_t
                or (t == best_t and leave_row is not None and bi < self.basis[leave_row])
            ):
                best_t, leave_row, leave_to_upper = t, i, to_upper
        if best_t is None:
            raise RuntimeError("unbounded direction in a bounded LP")

        for i in range(self.m):
            self.values[i] -= sigma * best_t * self.T[i][j]
        if leave_row is None:
            self.at_upper[j] = not self.at_upper[j]
            return

        start = self.upper[j] if self.at_upper[j] else self.zero
        entering_value = start + sigma * best_t
        leaving = self.basis[leave_row]
        self.at_upper[leaving] = leave_to_upper
        self.at_upper[j] = False
        self._pivot(leave_row, j)
        self.basis[leave_row] = j
        self.values[leave_row] = entering_value

    def _pivot(self, r: int, j: int) -> None:
        piv = self.T[r][j]
        row = [c / piv for c in self.T[r]]
        self.T[r] = row
        for i in range(self.m):
            if i != r:
                f = self.T[i][j]
                if f:
                    self.T[i] = [a - f * b for a, b in zip(self.T[i], row)]

    def solution(self) -> list:
        x = [self.upper[j] if self.at_upper[j] else self.zero for j in range(self.nx)]
        for i, bj in enumerate(self.basis):
            if bj < self.nx:
                x[bj] = self.values[i]
        if not self.exact:
            x = [min(1.0, max(0.0, v)) for v in x]
        return x


def _solve(params: ModelParams, mode: str, relaxed: bool) -> SolveResult:
    if mode not in ("float", "rational"):
        raise ValueError(f"mode must be 'float' or 'rational', got {mode!r}")
    exact = mode == "rational"
    inst = params.exact() if exact else params.inexact()
    lp = build_lp(inst)
    size = lp.size
    rows = [list(-lp.db)] if relaxed else [list(lp.da), list(-lp.db)]
    one = Fraction(1) if exact else 1.0
    tab = _Tableau(rows, [one] * size, exact)
    objective = list(lp.v)
    tab.run(objective, frozen=())

    # Resolve multiplicity of optima: extreme optima with largest and smallest total mass.
    ones = [one] * size
    hi_tab = _copy(tab)
    hi_tab.run(ones, frozen=[objective])
    lo_tab = _copy(tab)
    lo_tab.run([-c for c in ones], frozen=[objective])
    x_hi = _mechanism(hi_tab.solution(), exact)
    x_lo = _mechanism(lo_tab.solution(), exact)

    if exact:
        tie = list(x_hi.probs) != list(x_lo.probs)
    else:
        tie = bool(np.max(np.abs(x_hi.as_float() - x_lo.as_float())) > SNAP_TOL)

    report = ic_report(inst, x_hi, lp=lp, tol=0 if exact else IC_TOL)
    return SolveResult(
        x=x_hi,
        objective=np.dot(lp.v, x_hi.probs),
        binding_a=report.verdict_a == BINDING,
        binding_b=report.verdict_b == BINDING,
        fractional_indices=fractional_indices(x_hi),
        status=DEGENERATE_TIE if tie else OPTIMAL,
        alternatives=[x_lo] if tie else [],
        solver="lp-relaxed" if relaxed else "lp",
    )


def _copy(tab: _Tableau) -> _Tableau:
    new = object.__new__(_Tableau)
    new.__dict__.update(tab.__dict__)
    new.T = [list(r) for r in tab.T]
    new.basis = list(tab.basis)
    new.at_upper = list(tab.at_upper)
    new.values = list(tab.values)
    return new


def _mechanism(values, exact: bool) -> VotingMechanism:
    if exact:
        arr = np.empty(len(values), dtype=object)
        arr[:] = values
        return VotingMechanism(arr)
    return VotingMechanism(np.array(values, dtype=float))


def solve_full(params: ModelParams, mode: str = "float") -> SolveResult:
    """Maximize sum v(k) x(k) over the box subject to both incentive constraints."""
    return _solve(params, mode, relaxed=False)


def solve_relaxed(params: ModelParams, mode: str = "float") -> SolveResult:
    """Same program with the IC-a row dropped."""
    return _solve(params, mode, relaxed=True)
