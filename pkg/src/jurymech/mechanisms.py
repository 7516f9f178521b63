"""Voting mechanisms, LP coefficients, incentive slacks and structural classification."""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from numbers import Rational
from itertools import product
from typing import Mapping, NamedTuple, Optional

import numpy as np

from .model import ModelParams, k_J, k_P, likelihood

SNAP_TOL = 1e-9
IC_TOL = 1e-9

STRICT = "Strict"
BINDING = "Binding"
VIOLATED = "Violated"


@dataclass(frozen=True)
class VotingMechanism:
    """Choice probabilities x(0..n+1) indexed by the tally of a-votes."""

    probs: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.probs)
        if arr.dtype != object:
            arr = arr.astype(float)
        if arr.ndim != 1 or arr.size < 3:
            raise ValueError("a voting mechanism needs at least three entries (n+1 >= 2 agents)")
        if any(p < 0 or p > 1 for p in arr):
            raise ValueError("choice probabilities must lie in [0, 1]")
        arr.setflags(write=False)
        object.__setattr__(self, "probs", arr)

    @property
    def n_plus_1(self) -> int:
        return len(self.probs) - 1

    def __len__(self):
        return len(self.probs)

    def __getitem__(self, k):
        return self.probs[k]

    def __iter__(self):
        return iter(self.probs)

    def as_float(self) -> np.ndarray:
        return np.array([float(p) for p in self.probs])

    def to_json(self) -> dict:
        return {"agents": self.n_plus_1, "x": [float(p) for p in self.probs]}

    @classmethod
    def from_json(cls, obj: Mapping) -> "VotingMechanism":
        x = cls(obj["x"])
        if "agents" in obj and int(obj["agents"]) != x.n_plus_1:
            raise ValueError(
                f"mechanism has {len(x)} entries but agents={obj['agents']} needs {int(obj['agents']) + 1}"
            )
        return x


def _probs(x) -> np.ndarray:
    if isinstance(x, VotingMechanism):
        return x.probs
    arr = np.asarray(x)
    return arr if arr.dtype == object else arr.astype(float)


def _check_length(params: ModelParams, x) -> np.ndarray:
    arr = _probs(x)
    if params.is_exact and arr.dtype != object and not isinstance(x, VotingMechanism):
        raw = list(x)
        if all(isinstance(p, Rational) for p in raw):
            arr = _vector([Fraction(p) for p in raw], exact=True)
    if len(arr) != params.n_plus_1 + 1:
        raise ValueError(
            f"mechanism has {len(arr)} entries, instance with {params.n_plus_1} agents needs {params.n_plus_1 + 1}"
        )
    return arr


def binom_pmf(p, k: int, n: int):
    """Binomial pmf, zero outside 0..n. Fraction p gives an exact result."""
    if k < 0 or k > n:
        return Fraction(0) if isinstance(p, Fraction) else 0.0
    if isinstance(p, Fraction):
        return math.comb(n, k) * p ** k * (1 - p) ** (n - k)
    p = float(p)
    log_pmf = (
        math.lgamma(n + 1) - math.lgamma(k + 1) - math.lgamma(n - k + 1)
        + k * math.log(p) + (n - k) * math.log1p(-p)
    )
    return math.exp(log_pmf)


@dataclass(frozen=True)
class LPInstance:
    v: np.ndarray
    a: np.ndarray
    b: np.ndarray
    da: np.ndarray
    db: np.ndarray

    @property
    def size(self) -> int:
        return len(self.v)


def _vector(values, exact: bool) -> np.ndarray:
    if exact:
        out = np.empty(len(values), dtype=object)
        out[:] = values
        return out
    return np.array(values, dtype=float)


def _differences(c: np.ndarray) -> np.ndarray:
    # c(-1) = 0 by the binomial convention
    out = c.copy()
    out[1:] = c[1:] - c[:-1]
    return out


def build_lp(params: ModelParams) -> LPInstance:
    """Objective and constraint coefficients of the principal's LP in tally space.

    v(k) = Bin_b(k, n+1) (L(k) - t_P)
    a(k) = Bin_b(k, n) p_b (L(k+1) - t_J)
    b(k) = Bin_b(k, n) (1 - p_b) (L(k) - t_J)
    """
    exact = params.is_exact
    n = params.n
    pb = Fraction(params.p_beta) if exact else float(params.p_beta)
    t_P, t_J = params.t_P, params.t_J
    L = [likelihood(params, k) for k in range(n + 3)]
    v, a, b = [], [], []
    for k in range(n + 2):
        v.append(binom_pmf(pb, k, n + 1) * (L[k] - t_P))
        bin_n = binom_pmf(pb, k, n)
        a.append(bin_n * pb * (L[k + 1] - t_J))
        b.append(bin_n * (1 - pb) * (L[k] - t_J))
    v, a, b = (_vector(c, exact) for c in (v, a, b))
    return LPInstance(v=v, a=a, b=b, da=_differences(a), db=_differences(b))


class ICReport(NamedTuple):
    ic_a_lhs: float
    ic_b_lhs: float
    verdict_a: str
    verdict_b: str
    scale_a: float = 1.0
    scale_b: float = 1.0

    @property
    def satisfied(self) -> bool:
        return self.verdict_a != VIOLATED and self.verdict_b != VIOLATED

    def feasible(self, tol: float = IC_TOL) -> bool:
        """Feasibility with the tolerance shrunk to the size of the summed terms.

        A constraint whose terms are all tiny cannot hide a violation inside
        an absolute band it never reaches.
        """
        return (
            -self.ic_a_lhs >= -tol * min(1.0, self.scale_a)
            and self.ic_b_lhs >= -tol * min(1.0, self.scale_b)
        )


def _verdict(slack, tol) -> str:
    # slack > 0 means the constraint holds strictly
    if slack > tol:
        return STRICT
    if slack >= -tol:
        return BINDING
    return VIOLATED


def ic_report(params: ModelParams, x, lp: Optional[LPInstance] = None, tol: float = IC_TOL) -> ICReport:
    """IC-a holds iff sum da(k) x(k) <= 0; IC-b holds iff sum db(k) x(k) >= 0."""
    arr = _check_length(params, x)
    lp = lp or build_lp(params)
    lhs_a = np.dot(lp.da, arr)
    lhs_b = np.dot(lp.db, arr)
    scale_a = float(np.dot(np.abs(lp.da), np.abs(arr)))
    scale_b = float(np.dot(np.abs(lp.db), np.abs(arr)))
    return ICReport(lhs_a, lhs_b, _verdict(-lhs_a, tol), _verdict(lhs_b, tol), scale_a, scale_b)


def principal_payoff(params: ModelParams, x, lp: Optional[LPInstance] = None):
    """Return (objective in v-units, expected payoff in payoff units or None)."""
    arr = _check_length(params, x)
    lp = lp or build_lp(params)
    v_units = np.dot(lp.v, arr)
    if params.payoffs is None:
        return v_units, None
    return v_units, (1 - params.prior_alpha) * params.payoffs.V_alpha * v_units


def _cutoff_mechanism(params: ModelParams, c: int) -> VotingMechanism:
    exact = params.is_exact
    one, zero = (Fraction(1), Fraction(0)) if exact else (1.0, 0.0)
    return VotingMechanism(_vector([zero if k < c else one for k in range(params.n_plus_1 + 1)], exact))


def principal_preferred(params: ModelParams) -> VotingMechanism:
    return _cutoff_mechanism(params, k_P(params))


def agent_preferred(params: ModelParams) -> VotingMechanism:
    return _cutoff_mechanism(params, k_J(params))


def constant_mechanism(params: ModelParams, value) -> VotingMechanism:
    return VotingMechanism(_vector([value] * (params.n_plus_1 + 1), params.is_exact))


def hat_x_J(params: ModelParams, lp: Optional[LPInstance] = None) -> VotingMechanism:
    """x_J with x(k_J) lowered until IC-b binds."""
    lp = lp or build_lp(params)
    kj = k_J(params)
    probs = _cutoff_mechanism(params, kj).probs.copy()
    probs[kj] = lp.b[kj] / (lp.b[kj] - lp.b[kj - 1])
    return VotingMechanism(probs)


def check_x_J(params: ModelParams, lp: Optional[LPInstance] = None) -> VotingMechanism:
    """x_J with x(k_J - 1) raised until IC-a binds; identically one when k_J = 1."""
    lp = lp or build_lp(params)
    kj = k_J(params)
    if kj == 1:
        return _cutoff_mechanism(params, 0)
    probs = _cutoff_mechanism(params, kj).probs.copy()
    a_prev2 = lp.a[kj - 2]
    probs[kj - 1] = lp.a[kj - 1] / (lp.a[kj - 1] - a_prev2)
    return VotingMechanism(probs)


def w_ratio(params: ModelParams, k):
    """(L(k+1) - t_J) / (L(k) - t_J); the relation a(k) = p_b/(1-p_b) b(k) w(k) holds."""
    return (likelihood(params, k + 1) - params.t_J) / (likelihood(params, k) - params.t_J)


@dataclass(frozen=True)
class IntervalShape:
    """Zero mechanism or an interval mechanism with its boundary tallies and probabilities."""

    kind: str  # "Zero" or "Interval"
    lower: Optional[int] = None
    upper: Optional[int] = None
    lower_prob: Optional[float] = None
    upper_prob: Optional[float] = None

    @property
    def is_zero(self) -> bool:
        return self.kind == "Zero"


def snap(x, tol: float = SNAP_TOL) -> np.ndarray:
    arr = np.array([float(p) for p in _probs(x)])
    arr[np.abs(arr) <= tol] = 0.0
    arr[np.abs(arr - 1) <= tol] = 1.0
    return arr


def classify(x, tol: float = SNAP_TOL) -> Optional[IntervalShape]:
    """Interval structure of x after snapping, or None when x is not an interval mechanism."""
    raw = _probs(x)
    s = snap(raw, tol)
    support = np.flatnonzero(s > 0)
    if support.size == 0:
        return IntervalShape("Zero")
    lo, hi = int(support[0]), int(support[-1])
    if support.size != hi - lo + 1:
        return None
    if np.any(s[lo + 1:hi] != 1.0):
        return None
    lower_prob = 1.0 if s[lo] == 1.0 else float(raw[lo])
    upper_prob = 1.0 if s[hi] == 1.0 else float(raw[hi])
    return IntervalShape("Interval", lo, hi, lower_prob, upper_prob)


def fractional_indices(x, tol: float = SNAP_TOL) -> list:
    s = snap(x, tol)
    return [int(k) for k in np.flatnonzero((s > 0) & (s < 1))]


def is_monotone(x, tol: float = SNAP_TOL) -> bool:
    arr = np.array([float(p) for p in _probs(x)])
    return bool(np.all(np.diff(arr) >= -tol))


def is_responsive(x, tol: float = SNAP_TOL) -> bool:
    arr = np.array([float(p) for p in _probs(x)])
    return bool(arr.max() - arr.min() > tol)


def _direct_table(direct, n_plus_1: int) -> np.ndarray:
    """Dense table indexed by profile bits (bit i set = agent i reported a)."""
    size = 2 ** n_plus_1
    if isinstance(direct, Mapping):
        if len(direct) != size:
            raise ValueError(f"direct mechanism needs {size} profiles, got {len(direct)}")
        table = np.full(size, np.nan)
        for profile, value in direct.items():
            if len(profile) != n_plus_1 or set(profile) - {"a", "b"}:
                raise ValueError(f"bad profile {profile!r}: need a string over {{a,b}} of length {n_plus_1}")
            idx = sum(1 << i for i, s in enumerate(profile) if s == "a")
            table[idx] = value
        if np.isnan(table).any():
            raise ValueError("direct mechanism has repeated profiles")
        return table
    table = np.asarray(direct, dtype=float)
    if table.shape != (size,):
        raise ValueError(f"direct mechanism table must have {size} entries, got shape {table.shape}")
    return table


def symmetrize(direct, params: ModelParams) -> VotingMechanism:
    """Anonymous voting mechanism obtained by averaging a direct mechanism over agent relabelings.

    Averaging z over all (n+1)! permutations gives, at a profile with k
    a-reports, the mean of z over the C(n+1, k) profiles with that tally:
    every such profile is reached by the same number k!(n+1-k)! of
    permutations. So the tally mean is computed directly.
    """
    m = params.n_plus_1
    if m > 20:
        raise ValueError("profile tables are limited to 20 agents")
    table = _direct_table(direct, m)
    tallies = np.array([bin(i).count("1") for i in range(2 ** m)])
    sums = np.bincount(tallies, weights=table, minlength=m + 1)
    counts = np.bincount(tallies, minlength=m + 1)
    return VotingMechanism(np.clip(sums / counts, 0.0, 1.0))


def tally_embedding(x, n_plus_1: int) -> dict:
    """The direct mechanism that applies x to the tally of each profile."""
    arr = _probs(x)
    return {
        "".join(p): float(arr[p.count("a")]) for p in product("ab", repeat=n_plus_1)
    }
