"""Combinatorial actions: the agent chooses a subset of ``n`` basic actions.

Under a linear contract ``alpha`` subset ``S`` is worth
``alpha * R(S) - c(S)`` to the agent, where ``R(S)`` is the principal's
expected reward.  Each subset is a line in ``alpha``; critical values are the
points where the demanded subset's reward jumps, and they can be found with
demand queries alone by a recursive search over the upper envelope.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Callable, Sequence

from .model import LinearContract, Rewards, as_rewards, dot, to_rational

MAX_GROUND = 20

Subset = tuple[int, ...]
DemandOracle = Callable[["CombinatorialType", Fraction], Subset]


def subset_of(mask: int, n: int) -> Subset:
    return tuple(i for i in range(n) if (mask >> i) & 1)


@dataclass(frozen=True, eq=False)
class CombinatorialType:
    """Agent type over subsets of ``range(ground_size)``.

    ``success(S)`` is the outcome distribution of subset ``S`` (a sorted
    tuple) and ``cost(S)`` its cost.  Types compare by identity.
    """

    ground_size: int
    success: Callable[[Subset], Sequence]
    cost: Callable[[Subset], Fraction]
    rewards: Rewards = field(default_factory=lambda: Rewards((0, 1)))
    family: str = "custom"
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "rewards", as_rewards(self.rewards))
        if not 0 <= self.ground_size <= MAX_GROUND:
            raise ValueError(f"ground size must lie in [0, {MAX_GROUND}]")
        if to_rational(self.cost(())) != 0:
            raise ValueError("the empty set must cost 0")

    def reward(self, S: Subset) -> Fraction:
        dist = [to_rational(p) for p in self.success(tuple(S))]
        return dot(dist, self.rewards.values)

    @cached_property
    def table(self) -> list[tuple[Fraction, Fraction]]:
        """``(R(S), c(S))`` for every subset, indexed by bitmask."""
        n = self.ground_size
        out = []
        for mask in range(1 << n):
            S = subset_of(mask, n)
            dist = [to_rational(p) for p in self.success(S)]
            if len(dist) != self.rewards.m or any(p < 0 for p in dist) or sum(dist) != 1:
                raise ValueError(f"success({S}) is not a distribution over {self.rewards.m} outcomes")
            c = to_rational(self.cost(S))
            if c < 0:
                raise ValueError(f"cost({S}) is negative")
            out.append((dot(dist, self.rewards.values), c))
        return out

    def line(self, S: Subset) -> tuple[Fraction, Fraction]:
        mask = sum(1 << i for i in S)
        return self.table[mask]


def brute_force_demand(theta: CombinatorialType, alpha) -> Subset:
    """Best subset by enumeration; ties favor larger reward, then the smallest sorted tuple."""
    alpha = to_rational(alpha)
    if not 0 <= alpha <= 1:
        raise ValueError("alpha must lie in [0, 1]")
    best_key = None
    ties: list[int] = []
    for mask, (R, c) in enumerate(theta.table):
        key = (alpha * R - c, R)
        if best_key is None or key > best_key:
            best_key, ties = key, [mask]
        elif key == best_key:
            ties.append(mask)
    return min(subset_of(mask, theta.ground_size) for mask in ties)


def greedy_additive_demand(theta: CombinatorialType, alpha) -> Subset:
    """Demand for additive success probabilities and additive costs.

    Valid when the success probabilities sum to at most 1 (so the cap is never
    active) and every item has positive probability; each item is taken iff
    its marginal value is nonnegative.
    """
    alpha = to_rational(alpha)
    q = theta.params.get("q")
    w = theta.params.get("w")
    if theta.family != "additive" or q is None or w is None:
        raise ValueError("greedy demand needs additive rewards and additive costs")
    if sum(q) > 1 or any(x <= 0 for x in q):
        raise ValueError("greedy demand needs positive probabilities summing to at most 1")
    top = theta.rewards.values[1]
    return tuple(i for i in range(theta.ground_size) if alpha * top * q[i] - w[i] >= 0)


def demand(theta: CombinatorialType, alpha, oracle: DemandOracle = brute_force_demand) -> Subset:
    return oracle(theta, to_rational(alpha))


class CountingOracle:
    """Wraps a demand oracle and counts its calls."""

    def __init__(self, oracle: DemandOracle = brute_force_demand):
        self.oracle = oracle
        self.calls = 0

    def __call__(self, theta, alpha):
        self.calls += 1
        return self.oracle(theta, alpha)


def critical_values_comb(
    theta: CombinatorialType, oracle: DemandOracle = brute_force_demand
) -> list[Fraction]:
    """Breakpoints in ``(0, 1]`` of the demanded reward, using demand queries only.

    Query both ends of an interval.  Identical lines mean no breakpoint in
    between.  Otherwise query where the two lines cross: if nothing beats them
    there, the crossing is a breakpoint, else recurse on both halves.
    """
    def line(alpha):
        return theta.line(oracle(theta, alpha))

    found: list[Fraction] = []

    def search(left, right):
        (ra, ca), (rb, cb) = left, right
        if ra == rb:
            return  # equal slopes at both ends force identical lines
        x = (cb - ca) / (rb - ra)
        mid = line(x)
        if x * mid[0] - mid[1] == x * ra - ca:
            found.append(x)
            return
        search(left, mid)
        search(mid, right)

    search(line(Fraction(0)), line(Fraction(1)))
    return sorted(found)


def opt_linear_comb(
    types: Sequence[CombinatorialType],
    weights: Sequence,
    oracle: DemandOracle = brute_force_demand,
) -> tuple[LinearContract, Fraction]:
    """Best linear contract for weighted types, over 0 and their critical values."""
    pairs = [(theta, to_rational(w)) for theta, w in zip(types, weights) if to_rational(w)]
    if not pairs:
        raise ValueError("no types with positive weight")
    cands = {Fraction(0)}
    for theta, _ in pairs:
        cands.update(critical_values_comb(theta, oracle))
    best = None
    for alpha in sorted(cands):
        value = sum(
            (w * (1 - alpha) * theta.reward(oracle(theta, alpha)) for theta, w in pairs),
            Fraction(0),
        )
        if best is None or value > best[1]:
            best = (alpha, value)
    return LinearContract(best[0]), best[1]


def erm_linear_comb(
    samples: Sequence[CombinatorialType], r=None, oracle: DemandOracle = brute_force_demand
) -> tuple[LinearContract, Fraction]:
    """Empirically optimal linear contract over 0 and the samples' critical values."""
    counts = Counter(samples)
    if not counts:
        raise ValueError("no samples")
    if r is not None:
        r = as_rewards(r)
        if any(theta.rewards != r for theta in counts):
            raise ValueError("samples carry different rewards")
    total = sum(counts.values())
    return opt_linear_comb(list(counts), [Fraction(k, total) for k in counts.values()], oracle)


def make_type(
    reward: str = "additive",
    q: Sequence = (),
    cost: str = "additive",
    w: Sequence = (),
    rewards=(0, 1),
) -> CombinatorialType:
    """Binary-outcome combinatorial type from standard set-function families.

    ``reward="additive"``: success probability ``min(1, sum of q_i)``.
    ``reward="coverage"``: success probability ``1 - prod(1 - q_i)``.
    ``cost="additive"``: ``sum of w_i``.  ``cost="supermodular"``: ``(sum of w_i)**2``.
    A missing ``q`` or ``w`` defaults to zeros of the other's length.
    """
    q = [to_rational(x) for x in q]
    w = [to_rational(x) for x in w]
    if not q:
        q = [Fraction(0)] * len(w)
    if not w:
        w = [Fraction(0)] * len(q)
    if len(q) != len(w):
        raise ValueError("q and w must have the same length")
    if any(not 0 <= x <= 1 for x in q):
        raise ValueError("probabilities must lie in [0, 1]")
    if any(x < 0 for x in w):
        raise ValueError("weights must be nonnegative")
    rewards = as_rewards(rewards)
    if rewards.m != 2:
        raise ValueError("standard families have two outcomes")

    if reward == "additive":
        def prob(S):
            return min(Fraction(1), sum((q[i] for i in S), Fraction(0)))
    elif reward == "coverage":
        def prob(S):
            return 1 - math.prod((1 - q[i] for i in S), start=Fraction(1))
    else:
        raise ValueError(f"unknown reward family {reward!r}")

    if cost == "additive":
        def cost_fn(S):
            return sum((w[i] for i in S), Fraction(0))
    elif cost == "supermodular":
        def cost_fn(S):
            return sum((w[i] for i in S), Fraction(0)) ** 2
    else:
        raise ValueError(f"unknown cost family {cost!r}")

    def success(S):
        p = prob(S)
        return (1 - p, p)

    tags = {"additive": "additive", "coverage": "coverage-submodular"}
    family = tags[reward] + ("+supermodular-cost" if cost == "supermodular" else "")
    return CombinatorialType(len(q), success, cost_fn, rewards, family, {"q": q, "w": w})
