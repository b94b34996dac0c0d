"""Shattering constructions for bounded contracts and an exhaustive verifier.

A set of agent types with thresholds is shattered by a contract set when every
subset of the types can be singled out as exactly those whose principal
utility reaches its threshold under some contract of the set.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from .batch import type_utilities
from .errors import ResourceCapError
from .model import (
    INF,
    AgentType,
    Contract,
    Rewards,
    TypeDistribution,
    as_rewards,
    to_rational,
)
from .spaces import ContractSearchSpace, ExplicitSpace

MAX_SHATTER_TYPES = 20


@dataclass(frozen=True)
class ShatterInstance:
    types: tuple[AgentType, ...]
    thresholds: tuple[Fraction, ...]
    search_space: ContractSearchSpace
    rewards: Rewards

    def __post_init__(self):
        if len(self.types) != len(self.thresholds):
            raise ValueError("one threshold per type is required")


@dataclass(frozen=True)
class LadderParams:
    """Parameters of a ladder type.

    ``alphas`` holds ``0 = a_0 < a_1 < ... < a_l``; action ``i`` is the cheapest
    way to be paid about ``a_i`` on outcome ``j``.  ``subset`` lists the
    actions in ``1..l`` that are actually available.
    """

    alphas: tuple[Fraction, ...]
    outcome: int
    subset: frozenset[int]

    def __post_init__(self):
        alphas = tuple(to_rational(a) for a in self.alphas)
        object.__setattr__(self, "alphas", alphas)
        object.__setattr__(self, "subset", frozenset(self.subset))
        if not alphas or alphas[0] != 0:
            raise ValueError("alphas must start at 0")
        if any(b <= a for a, b in zip(alphas, alphas[1:])):
            raise ValueError("alphas must be strictly increasing")
        if any(not 1 <= i <= self.top for i in self.subset):
            raise ValueError("subset must lie in 1..l")
        if self.outcome < 1:
            raise ValueError("outcome must be a positive index")

    @property
    def top(self) -> int:
        return len(self.alphas) - 1

    def min_gap(self) -> Fraction:
        gaps = [b - a for a, b in zip(self.alphas, self.alphas[1:])]
        return min(gaps) if gaps else Fraction(1)

    def rho(self, r) -> Fraction:
        rj = as_rewards(r)[self.outcome]
        return Fraction(1, 3) * min(rj - self.alphas[-1], Fraction(1)) * self.min_gap()


def ladder_type(p: LadderParams, r, n: int, costs: str = "switch-at-rung") -> AgentType:
    """Agent type whose utility is high exactly when the payment gap hits an allowed rung.

    Action 0 always yields outcome 0.  Action ``1 <= i <= l`` puts mass
    ``s_i = (r_j - a_l)/(r_j - a_i)`` on outcome ``j`` and the rest on
    outcome 0.  Actions outside ``subset`` and actions above ``l`` are
    unavailable.

    With ``costs="switch-at-rung"`` the costs telescope over the available
    actions only: ``c_b = c_a + a_b (s_b - s_a)`` for consecutive available
    actions ``a < b`` (action 0 has ``s_0 = 0``).  The agent then switches to
    action ``b`` exactly when the payment gap ``t_j - t_0`` reaches ``a_b``.
    ``costs="cumulative"`` sums ``a_k (s_k - s_{k-1})`` over every rung
    ``k <= i`` starting from ``s_0 = (r_j - a_l)/r_j``; those switch points
    drift below the rungs, so it is kept only for comparison.
    """
    if costs not in ("switch-at-rung", "cumulative"):
        raise ValueError(f"unknown cost rule {costs!r}")
    r = as_rewards(r)
    j = p.outcome
    if j >= r.m:
        raise ValueError("outcome index out of range")
    rj = r[j]
    top = p.alphas[-1]
    if top >= rj:
        raise ValueError("largest alpha must be below the reward of the outcome")
    if p.top >= n:
        raise ValueError("need more actions than ladder rungs")

    def share(i: int) -> Fraction:
        return (rj - top) / (rj - p.alphas[i])

    rows = []
    for i in range(n):
        row = [Fraction(0)] * r.m
        if 1 <= i <= p.top:
            row[j] = share(i)
            row[0] = 1 - share(i)
        else:
            row[0] = Fraction(1)
        rows.append(tuple(row))

    cost: list = [Fraction(0)] + [INF] * (n - 1)
    if costs == "switch-at-rung":
        running, prev = Fraction(0), Fraction(0)
        for i in sorted(p.subset):
            running += p.alphas[i] * (share(i) - prev)
            prev = share(i)
            cost[i] = running
    else:
        running = Fraction(0)
        for i in range(1, p.top + 1):
            running += p.alphas[i] * (share(i) - share(i - 1))
            if i in p.subset:
                cost[i] = running
    return AgentType(tuple(rows), tuple(cost))


def grid_forcing_distribution(alphas: Sequence, r, n: int = 2) -> TypeDistribution:
    """Uniform mix of one idle type and one type per outcome ``j`` with cost ``alphas[j-1]``.

    The idle type always yields outcome 0.  Type ``j`` yields outcome ``j``
    through action 1 at cost ``alphas[j-1]``; every other action yields
    outcome 0.  Action 0 is free and all remaining actions are unavailable.
    """
    r = as_rewards(r)
    alphas = [to_rational(a) for a in alphas]
    if len(alphas) != r.m - 1:
        raise ValueError("need one alpha per nonzero outcome")
    if n < 2:
        raise ValueError("need at least two actions")
    if any(a < 0 or a >= r[j + 1] for j, a in enumerate(alphas)):
        raise ValueError("alphas must lie in [0, r_j)")
    idle = tuple([Fraction(1)] + [Fraction(0)] * (r.m - 1))
    types = [AgentType((idle,) * n, (Fraction(0),) + (INF,) * (n - 1))]
    for j, a in enumerate(alphas, start=1):
        hit = [Fraction(0)] * r.m
        hit[j] = Fraction(1)
        rows = [idle, tuple(hit)] + [idle] * (n - 2)
        types.append(AgentType(tuple(rows), (Fraction(0), a) + (INF,) * (n - 2)))
    return TypeDistribution.uniform(types)


def grid_forcing_optimum(alphas: Sequence, r) -> tuple[Contract, Fraction]:
    """Optimal contract ``(0, alphas...)`` and its value for the distribution above."""
    r = as_rewards(r)
    alphas = [to_rational(a) for a in alphas]
    m = r.m
    value = sum((r[j + 1] - a for j, a in enumerate(alphas)), Fraction(0)) / m
    return Contract([0, *alphas]), value


def bitmask_shatter_instance(n: int, m: int, r=None) -> ShatterInstance:
    """Ladder types indexed by (bit, outcome) shattered by structured contracts.

    Rungs sit at ``i/(2n)``; the type for bit ``b`` and outcome ``j`` allows
    the rungs ``i`` whose ``b``-th bit is set.  The contracts pay 0 on outcome
    0 and ``k/(2n) + 1/(24n)`` on each other outcome, for ``k`` in ``0..n-1``.
    """
    if n < 2 or n & (n - 1):
        raise ValueError("n must be a power of two, at least 2")
    if m < 2:
        raise ValueError("m must be at least 2")
    r = as_rewards(r if r is not None else [0] + [1] * (m - 1))
    if r.m != m:
        raise ValueError("rewards must have m entries")
    if any(v < 1 for v in r.values[1:]):
        raise ValueError("nonzero outcomes need rewards of at least 1")
    bits = n.bit_length() - 1
    alphas = tuple(Fraction(i, 2 * n) for i in range(n))
    types, thresholds = [], []
    for j in range(1, m):
        rho = min(r[j] - alphas[-1], Fraction(1)) / (6 * n)
        tau = (r[j] - alphas[-1]) - Fraction(5, 2) * rho
        for b in range(bits):
            subset = frozenset(i for i in range(1, n) if (i >> b) & 1)
            types.append(ladder_type(LadderParams(alphas, j, subset), r, n))
            thresholds.append(tau)
    offset = Fraction(1, 24 * n)
    contracts = []
    for ks in np.ndindex(*([n] * (m - 1))):
        contracts.append(Contract([0, *(Fraction(k, 2 * n) + offset for k in ks)]))
    return ShatterInstance(tuple(types), tuple(thresholds), ExplicitSpace(contracts), r)


def verify_shattering(
    inst: ShatterInstance, max_types: int = MAX_SHATTER_TYPES
) -> tuple[bool, dict[frozenset[int], Contract]]:
    """Exhaustively check that every subset of types is realized by some contract.

    Returns the verdict and, for every realized subset, the first contract of
    the search space realizing it.
    """
    k = len(inst.types)
    if k > max_types:
        raise ResourceCapError(f"{k} types means 2^{k} subsets, cap is 2^{max_types}")
    space = inst.search_space
    witnesses: dict[frozenset[int], Contract] = {}
    for start, pm in space.batches():
        above = np.zeros(len(pm), dtype=np.int64)
        for idx, (theta, tau) in enumerate(zip(inst.types, inst.thresholds)):
            vals, den = type_utilities(theta, inst.rewards, pm)
            hit = vals.astype(object) * tau.denominator >= tau.numerator * den
            above |= hit.astype(np.int64) << np.int64(idx)
        for pos, mask in enumerate(above.tolist()):
            key = frozenset(i for i in range(k) if (mask >> i) & 1)
            if key not in witnesses:
                witnesses[key] = space.contract_at(start + pos)
    return len(witnesses) == 2**k, witnesses
