"""Follow-the-leader in the online setting where each round's agent type is revealed after play."""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from .batch import type_utilities
from .bounded import opt_over_set
from .linear import critical_values, opt_linear
from .model import (
    Contract,
    LinearContract,
    TypeDistribution,
    as_rewards,
    principal_utility,
    to_rational,
)
from .rng import make_rng, sample_indices
from .spaces import ContractSearchSpace


@dataclass(frozen=True)
class OnlineRun:
    """One FTL run: what was played, who showed up, and cumulative regret per round."""

    T: int
    per_round: tuple[tuple[object, int, Fraction], ...]
    opt_value: Fraction
    cumulative_regret: tuple[Fraction, ...]


class _CriticalLeader:
    """Empirical optimum over 0 and the critical values of the types seen so far."""

    def __init__(self, D: TypeDistribution, r):
        self.profiles = [critical_values(theta, r) for theta in D.support]
        self.counts = [0] * len(D.support)
        self.candidates = {Fraction(0)}

    def zero(self):
        return LinearContract(0)

    def observe(self, k: int) -> None:
        if not self.counts[k]:
            self.candidates.update(self.profiles[k].breakpoints)
        self.counts[k] += 1

    def leader(self) -> LinearContract:
        seen = [(c, self.profiles[k]) for k, c in enumerate(self.counts) if c]
        best = None
        for alpha in sorted(self.candidates):
            value = sum((c * p.utility_at(alpha) for c, p in seen), Fraction(0))
            if best is None or value > best[1]:
                best = (alpha, value)
        return LinearContract(best[0])


class _GridLeader:
    """Empirical optimum over a finite contract set, from precomputed exact utilities."""

    def __init__(self, D: TypeDistribution, r, S: ContractSearchSpace):
        self.S = S
        pm = S.payment_matrix(0, len(S))
        parts = [type_utilities(theta, r, pm) for theta in D.support]
        common = math.lcm(*(den for _, den in parts))
        self.scaled = [vals.astype(object) * (common // den) for vals, den in parts]
        self.score = np.zeros(len(S), dtype=object)

    def zero(self):
        return Contract.zero(self.S.m)

    def observe(self, k: int) -> None:
        self.score = self.score + self.scaled[k]

    def leader(self) -> Contract:
        top = self.score.max()
        ties = np.flatnonzero(self.score == top)
        if self.S.lexicographic:
            return self.S.contract_at(int(ties[0]))
        return min(self.S.contract_at(int(j)) for j in ties)


def ftl_run(
    D: TypeDistribution,
    r,
    learner="critical",
    T: int = 1,
    seed: int = 0,
    opt_value=None,
    stream: Sequence[int] = (),
) -> OnlineRun:
    """Play the zero contract first, then the empirical optimum of all past types.

    ``learner`` is ``"critical"`` (exact linear-contract ERM) or a contract
    search space.  Regret is measured against ``opt_value``, by default the
    exact optimum of the learner's class under ``D``.
    """
    r = as_rewards(r)
    if T < 1:
        raise ValueError("T must be at least 1")
    if learner == "critical":
        lead = _CriticalLeader(D, r)
        if opt_value is None:
            opt_value = opt_linear(D, r)[1]
    elif isinstance(learner, ContractSearchSpace):
        lead = _GridLeader(D, r, learner)
        if opt_value is None:
            opt_value = opt_over_set(D, learner, r)[1]
    else:
        raise ValueError(f"unknown learner {learner!r}")
    opt_value = to_rational(opt_value)

    types = sample_indices(D, T, make_rng(seed, *stream)).tolist()
    cache: dict[tuple[int, object], Fraction] = {}
    rounds, regret = [], []
    total = Fraction(0)
    t = lead.zero()
    for i, k in enumerate(types):
        if i:
            t = lead.leader()
        key = (k, t)
        if key not in cache:
            cache[key] = principal_utility(D.support[k], t, r)
        u = cache[key]
        total += u
        rounds.append((t, k, u))
        regret.append((i + 1) * opt_value - total)
        lead.observe(k)
    return OnlineRun(T, tuple(rounds), opt_value, tuple(regret))


@dataclass(frozen=True)
class RegretSummary:
    table: tuple[tuple[int, Fraction], ...]
    slope: float


def fit_loglog_slope(xs: Sequence[float], ys: Sequence[float]) -> float:
    """Least-squares slope of ``log y`` against ``log x``; NaN when undefined."""
    if len(xs) < 2 or any(y <= 0 for y in ys):
        return math.nan
    if len(set(ys)) == 1:
        return 0.0
    lx = np.log(np.asarray(xs, dtype=float))
    ly = np.log(np.asarray(ys, dtype=float))
    return float(np.polyfit(lx, ly, 1)[0])


def regret_summary(runs: Sequence[OnlineRun], checkpoints: Sequence[int]) -> RegretSummary:
    """Mean cumulative regret at each checkpoint and its log-log slope."""
    if not runs:
        raise ValueError("no runs")
    table = []
    for T in checkpoints:
        if any(T > run.T for run in runs):
            raise ValueError(f"checkpoint {T} beyond a run's horizon")
        mean = sum((run.cumulative_regret[T - 1] for run in runs), Fraction(0)) / len(runs)
        table.append((T, mean))
    slope = fit_loglog_slope([T for T, _ in table], [float(v) for _, v in table])
    return RegretSummary(tuple(table), slope)
