"""Problem instances: likelihood ratios, preferred cutoffs and the standing assumptions."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from fractions import Fraction
from numbers import Rational, Real
from typing import NamedTuple, Optional

ASSUMPTION_RTOL = 1e-9


class AssumptionError(ValueError):
    """Raised when a parameter set violates one of the model assumptions."""

    def __init__(self, report: "AssumptionReport"):
        self.report = report
        super().__init__("; ".join(report.messages))


class Payoffs(NamedTuple):
    V_alpha: Real
    V_beta: Real
    U_alpha: Real
    U_beta: Real


class AssumptionReport(NamedTuple):
    a1_ordering: bool
    a2_no_partisans: bool
    a3_no_indifference: bool
    messages: list

    @property
    def ok(self) -> bool:
        return self.a1_ordering and self.a2_no_partisans and self.a3_no_indifference


@dataclass(frozen=True)
class ModelParams:
    """A jury instance with n+1 identical agents and a principal.

    Fields may be floats or Fractions. When every field is rational the
    instance is *exact* and downstream computations stay in Fraction
    arithmetic.
    """

    n_plus_1: int
    prior_alpha: Real
    p_alpha: Real
    p_beta: Real
    t_P: Real
    t_J: Real
    payoffs: Optional[Payoffs] = None
    check: bool = field(default=True, repr=False, compare=False)

    def __post_init__(self):
        if not isinstance(self.n_plus_1, int) or self.n_plus_1 < 2:
            raise ValueError(f"need at least 2 agents, got {self.n_plus_1!r}")
        for name in ("prior_alpha", "p_alpha", "p_beta"):
            value = getattr(self, name)
            if not 0 < value < 1:
                raise ValueError(f"{name} must lie in (0, 1), got {value}")
        if not self.p_alpha > self.p_beta:
            raise ValueError("signals must be informative: p_alpha > p_beta")
        if not (self.t_P > 0 and self.t_J > 0):
            raise ValueError("thresholds of doubt must be positive")
        if self.check:
            report = validate_assumptions(self)
            if not report.ok:
                raise AssumptionError(report)

    @property
    def n(self) -> int:
        return self.n_plus_1 - 1

    @property
    def is_exact(self) -> bool:
        return all(
            isinstance(v, Rational)
            for v in (self.prior_alpha, self.p_alpha, self.p_beta, self.t_P, self.t_J)
        )

    def exact(self, binary: bool = False) -> "ModelParams":
        """Copy with every field converted to a Fraction.

        Floats are read through their shortest decimal repr, so 0.05 becomes
        1/20. With ``binary=True`` the exact binary value of each float is
        kept instead, so the copy describes the very same instance.
        """
        conv = _binary_fraction if binary else to_fraction
        return replace(
            self,
            prior_alpha=conv(self.prior_alpha),
            p_alpha=conv(self.p_alpha),
            p_beta=conv(self.p_beta),
            t_P=conv(self.t_P),
            t_J=conv(self.t_J),
            check=False,
        )

    def inexact(self) -> "ModelParams":
        return replace(
            self,
            prior_alpha=float(self.prior_alpha),
            p_alpha=float(self.p_alpha),
            p_beta=float(self.p_beta),
            t_P=float(self.t_P),
            t_J=float(self.t_J),
            check=False,
        )

    def with_thresholds(self, t_P=None, t_J=None, check=True) -> "ModelParams":
        return replace(
            self,
            t_P=self.t_P if t_P is None else t_P,
            t_J=self.t_J if t_J is None else t_J,
            payoffs=None,
            check=check,
        )

    def log_likelihood(self, k) -> float:
        return _log_likelihood(self, k)

    def likelihood(self, k):
        return likelihood(self, k)


def to_fraction(value) -> Fraction:
    if isinstance(value, Fraction):
        return value
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, str):
        return Fraction(value.strip())
    return Fraction(repr(float(value)))


def _binary_fraction(value) -> Fraction:
    return value if isinstance(value, Fraction) else Fraction(value)


def params_from_payoffs(n_plus_1, prior_alpha, p_alpha, p_beta,
                        V_alpha, V_beta, U_alpha, U_beta) -> ModelParams:
    """Build an instance from raw payoffs; thresholds are -V(beta)/V(alpha) and -U(beta)/U(alpha)."""
    if not V_alpha > 0 > V_beta:
        raise ValueError("principal payoffs need V_alpha > 0 > V_beta")
    if not U_alpha > 0 > U_beta:
        raise ValueError("agent payoffs need U_alpha > 0 > U_beta")
    return ModelParams(
        n_plus_1=n_plus_1,
        prior_alpha=prior_alpha,
        p_alpha=p_alpha,
        p_beta=p_beta,
        t_P=-V_beta / V_alpha,
        t_J=-U_beta / U_alpha,
        payoffs=Payoffs(V_alpha, V_beta, U_alpha, U_beta),
    )


def _log_likelihood(params: ModelParams, k) -> float:
    pa, pb, prior = float(params.p_alpha), float(params.p_beta), float(params.prior_alpha)
    return (
        math.log(prior) - math.log1p(-prior)
        + k * (math.log(pa) - math.log(pb))
        + (params.n_plus_1 - k) * (math.log1p(-pa) - math.log1p(-pb))
    )


def likelihood(params: ModelParams, k: int):
    """Relative likelihood of state alpha given k a-signals among all n+1 agents.

    Exact instances return a Fraction; otherwise the value is computed in
    log space so that large agent counts do not overflow intermediate powers.
    """
    if params.is_exact:
        pa, pb, prior = params.p_alpha, params.p_beta, params.prior_alpha
        up = Fraction(pa) / pb
        down = Fraction(1 - pa) / (1 - pb)
        return Fraction(prior) / (1 - prior) * up ** k * down ** (params.n_plus_1 - k)
    return math.exp(_log_likelihood(params, k))


def likelihood_ratio_step(params: ModelParams) -> float:
    """L(k+1)/L(k), constant in k."""
    pa, pb = params.p_alpha, params.p_beta
    return (pa / pb) * ((1 - pb) / (1 - pa))


def inverse_likelihood(params: ModelParams, t) -> float:
    """Real k with L(k) = t."""
    return (math.log(float(t)) - _log_likelihood(params, 0)) / math.log(float(likelihood_ratio_step(params)))


def cutoff(params: ModelParams, threshold) -> int:
    """Smallest tally k with L(k) > threshold."""
    if not likelihood(params, 0) < threshold < likelihood(params, params.n_plus_1):
        raise ValueError(
            f"threshold {threshold} outside (L(0), L(n+1)): a partisan parameter"
        )
    for k in range(params.n_plus_1 + 1):
        if likelihood(params, k) > threshold:
            return k
    raise AssertionError("unreachable: L(n+1) exceeds threshold")


def k_J(params: ModelParams) -> int:
    return cutoff(params, params.t_J)


def k_P(params: ModelParams) -> int:
    return cutoff(params, params.t_P)


def conflict_of_interest(params: ModelParams) -> bool:
    return k_J(params) < k_P(params)


def validate_assumptions(params: ModelParams) -> AssumptionReport:
    messages = []
    a1 = params.t_P >= params.t_J
    if not a1:
        messages.append(f"Assumption 1 (ordering) violated: t_P={params.t_P} < t_J={params.t_J}")

    L0 = likelihood(params, 0)
    Ln1 = likelihood(params, params.n_plus_1)
    a2 = True
    for name, t in (("t_J", params.t_J), ("t_P", params.t_P)):
        if not L0 < t < Ln1:
            a2 = False
            messages.append(
                f"Assumption 2 (no partisans) violated: {name}={t} outside (L(0)={float(L0):.6g}, "
                f"L(n+1)={float(Ln1):.6g})"
            )

    a3 = True
    for name, t in (("t_J", params.t_J), ("t_P", params.t_P)):
        hit = _indifference_tally(params, t)
        if hit is not None:
            a3 = False
            messages.append(
                f"Assumption 3 (no indifferences) violated: {name}={t} coincides with L({hit})"
            )
    return AssumptionReport(a1, a2, a3, messages)


def _indifference_tally(params: ModelParams, t):
    for k in range(params.n_plus_1 + 1):
        L = likelihood(params, k)
        if t == L or abs(float(t) - float(L)) <= ASSUMPTION_RTOL * float(L):
            return k
    if float(t) > 0:
        pre = inverse_likelihood(params, t)
        nearest = round(pre)
        if abs(pre - nearest) <= ASSUMPTION_RTOL:
            return nearest
    return None
