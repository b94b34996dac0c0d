"""Linear contracts: critical values, reward step functions, grids and ERM.

Under the linear contract ``alpha * r`` action ``i`` gives the agent
``alpha * (f_i . r) - c_i``, a line in ``alpha``.  The agent's best response
follows the upper envelope of these lines, so the principal's expected reward
is a nondecreasing step function of ``alpha`` that jumps only where the
envelope switches lines.  Those jump points are the critical values.
"""

from __future__ import annotations

import bisect
import functools
from collections import Counter
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

from .model import (
    INF,
    AgentType,
    LinearContract,
    TypeDistribution,
    as_rewards,
    best_response,
    to_rational,
)


@dataclass(frozen=True)
class CriticalValueProfile:
    """Breakpoints of the reward step function and the reward on each piece.

    ``reward_levels[k]`` is the reward on the piece that starts at
    ``breakpoints[k - 1]`` (``k = 0`` is the piece starting at 0) and
    ``actions[k]`` is the best response there.
    """

    breakpoints: tuple[Fraction, ...]
    reward_levels: tuple[Fraction, ...]
    actions: tuple[int, ...]

    def reward_at(self, alpha) -> Fraction:
        return self.reward_levels[bisect.bisect_right(self.breakpoints, alpha)]

    def action_at(self, alpha) -> int:
        return self.actions[bisect.bisect_right(self.breakpoints, alpha)]

    def utility_at(self, alpha) -> Fraction:
        return (1 - alpha) * self.reward_at(alpha)


@dataclass(frozen=True)
class Step:
    """Constant piece of the reward function on ``[lo, hi)`` (``[lo, hi]`` if closed)."""

    lo: Fraction
    hi: Fraction
    closed: bool
    reward: Fraction
    action: int

    def __contains__(self, alpha) -> bool:
        return self.lo <= alpha < self.hi or (self.closed and alpha == self.hi)


def _meet(a, b) -> Fraction:
    # alpha where lines (slope, intercept, _) a and b cross; slopes differ
    return (a[1] - b[1]) / (b[0] - a[0])


def _upper_hull(theta: AgentType, rewards: Sequence[Fraction]) -> list[tuple]:
    best: dict[Fraction, tuple[Fraction, int]] = {}
    for i, (s, c) in enumerate(zip(rewards, theta.c)):
        if c == INF:
            continue
        cur = best.get(s)
        if cur is None or -c > cur[0]:
            best[s] = (-c, i)
    hull: list[tuple] = []
    for s in sorted(best):
        line = (s, *best[s])
        while len(hull) >= 2 and _meet(hull[-2], line) <= _meet(hull[-2], hull[-1]):
            hull.pop()
        hull.append(line)
    return hull


def critical_values(theta: AgentType, r) -> CriticalValueProfile:
    r = as_rewards(r)
    rewards = theta.rewards_of(r)
    hull = _upper_hull(theta, rewards)

    k = 0
    while k + 1 < len(hull) and _meet(hull[k], hull[k + 1]) <= 0:
        k += 1
    starts = [Fraction(0)]
    lines = [hull[k]]
    while k + 1 < len(hull):
        x = _meet(hull[k], hull[k + 1])
        if x >= 1:
            break
        k += 1
        starts.append(x)
        lines.append(hull[k])

    levels = [line[0] for line in lines]
    actions = [line[2] for line in lines]
    # At alpha = 1 the principal earns nothing from any action, so the
    # smallest-index rule decides among the agent's tied actions.
    top = best_response(theta, LinearContract(1), r)
    if rewards[top] != levels[-1]:
        starts.append(Fraction(1))
        levels.append(rewards[top])
        actions.append(top)
    return CriticalValueProfile(tuple(starts[1:]), tuple(levels), tuple(actions))


def reward_steps(theta: AgentType, r) -> list[Step]:
    prof = critical_values(theta, r)
    edges = [Fraction(0), *prof.breakpoints]
    steps = []
    for k, (lo, level, action) in enumerate(zip(edges, prof.reward_levels, prof.actions)):
        last = k == len(edges) - 1
        hi = Fraction(1) if last else edges[k + 1]
        steps.append(Step(lo, hi, last, level, action))
    return steps


@dataclass(frozen=True)
class EpsGrid:
    """The multiples of ``eps`` in ``[0, 1]`` together with 1."""

    eps: Fraction
    points: tuple[Fraction, ...]


def eps_grid(eps) -> EpsGrid:
    return _eps_grid(to_rational(eps))


@functools.lru_cache(maxsize=64)
def _eps_grid(eps: Fraction) -> EpsGrid:
    if not 0 < eps <= 1:
        raise ValueError(f"eps must lie in (0, 1], got {eps}")
    count = int(1 / eps)
    points = {k * eps for k in range(count + 1)}
    points.add(Fraction(1))
    return EpsGrid(eps, tuple(sorted(points)))


def _argmax_alpha(
    profiles: Mapping[AgentType, CriticalValueProfile],
    weights: Mapping[AgentType, Fraction],
    candidates: Iterable[Fraction],
) -> tuple[LinearContract, Fraction]:
    best_alpha = best_value = None
    for alpha in sorted(set(candidates)):
        value = sum(
            (w * profiles[theta].utility_at(alpha) for theta, w in weights.items()),
            Fraction(0),
        )
        if best_value is None or value > best_value:
            best_alpha, best_value = alpha, value
    return LinearContract(best_alpha), best_value


def _candidates(profiles, mode: str, eps) -> list[Fraction]:
    if mode == "critical":
        out = {Fraction(0)}
        for prof in profiles.values():
            out.update(prof.breakpoints)
        return sorted(out)
    if mode == "grid":
        if eps is None:
            raise ValueError("grid mode needs eps")
        return list(eps_grid(eps).points)
    raise ValueError(f"unknown mode {mode!r}")


def erm_linear(
    samples: Sequence[AgentType], r, mode: str = "critical", eps=None
) -> tuple[LinearContract, Fraction]:
    """Empirically optimal linear contract and its empirical utility.

    ``mode="critical"`` searches 0 and every critical value of the samples,
    which contains an exact empirical optimum.  ``mode="grid"`` searches
    ``eps_grid(eps)``.  Ties go to the smallest alpha.
    """
    r = as_rewards(r)
    counts = Counter(samples)
    if not counts:
        raise ValueError("no samples")
    total = sum(counts.values())
    weights = {theta: Fraction(k, total) for theta, k in counts.items()}
    profiles = {theta: critical_values(theta, r) for theta in counts}
    return _argmax_alpha(profiles, weights, _candidates(profiles, mode, eps))


def opt_linear(D: TypeDistribution, r) -> tuple[LinearContract, Fraction]:
    """Exact optimal linear contract for a finite-support distribution."""
    r = as_rewards(r)
    weights: dict[AgentType, Fraction] = {}
    for theta, w in D.items():
        if w:
            weights[theta] = weights.get(theta, Fraction(0)) + w
    profiles = {theta: critical_values(theta, r) for theta in weights}
    return _argmax_alpha(profiles, weights, _candidates(profiles, "critical", None))


def erm_linear_counts(
    profiles: Sequence[CriticalValueProfile],
    counts: Sequence[int],
    mode: str = "critical",
    eps=None,
) -> tuple[LinearContract, Fraction]:
    """:func:`erm_linear` for a sample given as counts over types with known profiles."""
    total = sum(int(k) for k in counts)
    if total <= 0:
        raise ValueError("no samples")
    used = {i: profiles[i] for i, k in enumerate(counts) if k}
    weights = {i: Fraction(int(counts[i]), total) for i in used}
    return _argmax_alpha(used, weights, _candidates(used, mode, eps))


def opt_linear_grid(D: TypeDistribution, r, eps) -> tuple[LinearContract, Fraction]:
    """Best linear contract on ``eps_grid(eps)``."""
    r = as_rewards(r)
    weights: dict[AgentType, Fraction] = {}
    for theta, w in D.items():
        weights[theta] = weights.get(theta, Fraction(0)) + w
    profiles = {theta: critical_values(theta, r) for theta in weights}
    return _argmax_alpha(profiles, weights, eps_grid(eps).points)
