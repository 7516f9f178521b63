"""The Bayesian voting game induced by a mechanism: exact expectations and a seeded simulator."""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .mechanisms import _check_length, _direct_table, binom_pmf
from .model import ModelParams

BR_TIE_TOL = 1e-12
CHUNK = 1 << 16


class ReportingStrategy(NamedTuple):
    """Probability of reporting a after an a-signal (q_a) and after a b-signal (q_b)."""

    q_a: float = 1.0
    q_b: float = 0.0

    def validate(self):
        if not (0 <= self.q_a <= 1 and 0 <= self.q_b <= 1):
            raise ValueError(f"report probabilities must lie in [0, 1], got {self}")
        return self


TRUTHFUL = ReportingStrategy(1.0, 0.0)


@dataclass(frozen=True)
class SimConfig:
    trials: int
    seed: int = 0

    def __post_init__(self):
        if self.trials < 1:
            raise ValueError("trials must be at least 1")
        if not 0 <= self.seed < 2 ** 64:
            raise ValueError("seed must be a 64-bit unsigned integer")


@dataclass(frozen=True)
class SimReport:
    trials: int
    seed: int
    principal_mean: float
    principal_se: float
    agent_mean: float
    agent_se: float

    def to_json(self) -> dict:
        return {
            "trials": self.trials,
            "seed": self.seed,
            "principal_mean": self.principal_mean,
            "principal_se": self.principal_se,
            "agent_mean": self.agent_mean,
            "agent_se": self.agent_se,
        }


def payoff_table(params: ModelParams):
    """(V_alpha, V_beta, U_alpha, U_beta); without raw payoffs, V_alpha = U_alpha = 1."""
    if params.payoffs is not None:
        return tuple(float(v) for v in params.payoffs)
    return 1.0, -float(params.t_P), 1.0, -float(params.t_J)


def _state_probs(params: ModelParams):
    prior = float(params.prior_alpha)
    return np.array([prior, 1 - prior]), np.array([float(params.p_alpha), float(params.p_beta)])


def _posterior(params: ModelParams, signal: str) -> np.ndarray:
    prior, p = _state_probs(params)
    like = p if signal == "a" else 1 - p
    joint = prior * like
    return joint / joint.sum()


def _tally_pmf(prob: float, n: int) -> np.ndarray:
    return np.array([binom_pmf(prob, k, n) for k in range(n + 1)])


def _report_values(params: ModelParams, x: np.ndarray, signal: str, others: ReportingStrategy):
    """Expected agent utility of reporting a and of reporting b, given own signal."""
    _, p = _state_probs(params)
    _, _, U_a, U_b = payoff_table(params)
    U = np.array([U_a, U_b])
    post = _posterior(params, signal)
    n = params.n
    vote_a = vote_b = 0.0
    for w in range(2):
        r = p[w] * others.q_a + (1 - p[w]) * others.q_b
        pmf = _tally_pmf(r, n)
        vote_a += post[w] * U[w] * np.dot(pmf, x[1:])
        vote_b += post[w] * U[w] * np.dot(pmf, x[:-1])
    return vote_a, vote_b


def deviation_gains(params: ModelParams, x):
    """Utility gain of truthful reporting over deviating, after an a-signal and after a b-signal.

    Other agents report truthfully. Both gains are nonnegative exactly when
    the mechanism is incentive compatible.
    """
    arr = np.array([float(p) for p in _check_length(params, x)])
    a_truth, a_lie = _report_values(params, arr, "a", TRUTHFUL)
    b_lie, b_truth = _report_values(params, arr, "b", TRUTHFUL)
    return float(a_truth - a_lie), float(b_truth - b_lie)


def unilateral_best_response(params: ModelParams, x, others: ReportingStrategy = TRUTHFUL) -> ReportingStrategy:
    """Pure best response of one agent when the other n agents play ``others``.

    Indifference within 1e-12 is resolved toward reporting the signal.
    """
    others = ReportingStrategy(*others).validate()
    arr = np.array([float(p) for p in _check_length(params, x)])
    a_vote_a, a_vote_b = _report_values(params, arr, "a", others)
    b_vote_a, b_vote_b = _report_values(params, arr, "b", others)
    q_a = 0.0 if a_vote_b > a_vote_a + BR_TIE_TOL else 1.0
    q_b = 1.0 if b_vote_a > b_vote_b + BR_TIE_TOL else 0.0
    return ReportingStrategy(q_a, q_b)


def expected_payoffs(params: ModelParams, x, strategy: ReportingStrategy = TRUTHFUL):
    """Exact (principal, agent) expected payoffs when every agent plays ``strategy``."""
    strategy = ReportingStrategy(*strategy).validate()
    arr = np.array([float(p) for p in _check_length(params, x)])
    prior, p = _state_probs(params)
    V_a, V_b, U_a, U_b = payoff_table(params)
    chosen = np.empty(2)
    for w in range(2):
        r = p[w] * strategy.q_a + (1 - p[w]) * strategy.q_b
        chosen[w] = np.dot(_tally_pmf(r, params.n_plus_1), arr)
    weight = prior * chosen
    return float(weight @ [V_a, V_b]), float(weight @ [U_a, U_b])


def direct_mechanism_payoff(params: ModelParams, direct) -> float:
    """Principal's expected payoff of a direct mechanism under truthful reporting.

    Sums over every signal profile explicitly; independent of any tally
    aggregation.
    """
    m = params.n_plus_1
    table = _direct_table(direct, m)
    prior, p = _state_probs(params)
    V_a, V_b, _, _ = payoff_table(params)
    total = 0.0
    for idx, z in enumerate(table):
        k = bin(idx).count("1")
        pr_alpha = prior[0] * p[0] ** k * (1 - p[0]) ** (m - k)
        pr_beta = prior[1] * p[1] ** k * (1 - p[1]) ** (m - k)
        total += z * (pr_alpha * V_a + pr_beta * V_b)
    return total


def _threads() -> int:
    try:
        return max(1, int(os.environ.get("JURYMECH_THREADS", "1")))
    except ValueError:
        return 1


def _simulate_chunk(args):
    seed_seq, size, x, prior, p, strat, payoffs = args
    rng = np.random.Generator(np.random.Philox(seed_seq))
    m = len(x) - 1
    alpha = rng.random(size) < prior
    p_state = np.where(alpha, p[0], p[1])
    a_signals = rng.binomial(m, p_state)
    reports = rng.binomial(a_signals, strat.q_a) + rng.binomial(m - a_signals, strat.q_b)
    choose_a = rng.random(size) < x[reports]
    V_a, V_b, U_a, U_b = payoffs
    principal = np.where(choose_a, np.where(alpha, V_a, V_b), 0.0)
    agent = np.where(choose_a, np.where(alpha, U_a, U_b), 0.0)
    return principal.sum(), (principal ** 2).sum(), agent.sum(), (agent ** 2).sum()


def simulate(params: ModelParams, x, strategy: ReportingStrategy = TRUTHFUL,
             config: SimConfig = SimConfig(100_000)) -> SimReport:
    """Monte Carlo estimate of both parties' payoffs.

    Trials are cut into fixed-size chunks, each with its own Philox stream
    spawned from the seed, and partial sums are merged in chunk order. The
    result is therefore bit-identical for a given seed whatever the number
    of worker threads (JURYMECH_THREADS).
    """
    strategy = ReportingStrategy(*strategy).validate()
    arr = np.array([float(p) for p in _check_length(params, x)])
    prior, p = _state_probs(params)
    payoffs = payoff_table(params)
    n_chunks = -(-config.trials // CHUNK)
    children = np.random.SeedSequence(config.seed).spawn(n_chunks)
    jobs = [
        (children[i], min(CHUNK, config.trials - i * CHUNK), arr, prior[0], p, strategy, payoffs)
        for i in range(n_chunks)
    ]
    workers = min(_threads(), n_chunks)
    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            partial = list(pool.map(_simulate_chunk, jobs))
    else:
        partial = [_simulate_chunk(job) for job in jobs]

    sums = np.zeros(4)
    for part in partial:
        sums += part
    N = config.trials

    def mean_se(s, s2):
        mean = s / N
        if N == 1:
            return float(mean), 0.0
        var = max(s2 / N - mean ** 2, 0.0) * N / (N - 1)
        return float(mean), float(np.sqrt(var / N))

    pm, pse = mean_se(sums[0], sums[1])
    am, ase = mean_se(sums[2], sums[3])
    return SimReport(config.trials, config.seed, pm, pse, am, ase)
