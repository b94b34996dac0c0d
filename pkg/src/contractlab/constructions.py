"""Named instances: the two-type linear family, its multi-outcome analogue,
the unbounded-contract counterexample, and random rational instances."""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from .model import INF, AgentType, Contract, Rewards, TypeDistribution, to_rational

HALF = Fraction(1, 2)
QUARTER = Fraction(1, 4)
BINARY = Rewards((0, 1))


def theta1() -> AgentType:
    """Both actions produce success with probability 1/2; action 1 costs 1/4."""
    return AgentType(((HALF, HALF), (HALF, HALF)), (0, QUARTER))


def theta2() -> AgentType:
    """Action 0 always fails; action 1 succeeds half the time at cost 1/4."""
    return AgentType(((1, 0), (HALF, HALF)), (0, QUARTER))


def _check_two_type_eps(eps: Fraction) -> None:
    if not 0 < eps <= Fraction(1, 8):
        raise ValueError("eps must lie in (0, 1/8] so both masses are nonnegative")


def d1_linear(eps) -> TypeDistribution:
    """Mass 1/2 - 4 eps on theta1 and 1/2 + 4 eps on theta2; alpha = 1/2 is optimal."""
    eps = to_rational(eps)
    _check_two_type_eps(eps)
    return TypeDistribution((theta1(), theta2()), (HALF - 4 * eps, HALF + 4 * eps))


def d2_linear(eps) -> TypeDistribution:
    """The masses of :func:`d1_linear` swapped; alpha = 0 is optimal."""
    eps = to_rational(eps)
    _check_two_type_eps(eps)
    return TypeDistribution((theta1(), theta2()), (HALF + 4 * eps, HALF - 4 * eps))


def dz_rewards(m: int) -> Rewards:
    return Rewards((0,) + (1,) * (m - 1))


def dz_bounded(m: int, eps, z: Sequence[int]) -> TypeDistribution:
    """Two types per nonzero outcome ``j``, weighted by the sign ``z[j-1]``.

    The first type of pair ``j`` earns outcome ``j`` half the time whatever it
    does; the second only reaches outcome ``j`` through the costly action.
    Support order: pair 1 (first, second), pair 2, ...
    """
    eps = to_rational(eps)
    if m < 2:
        raise ValueError("m must be at least 2")
    if len(z) != m - 1 or any(s not in (-1, 1) for s in z):
        raise ValueError(f"z must be a sequence of {m - 1} signs")
    if not 0 < eps <= Fraction(1, 16):
        raise ValueError("eps must lie in (0, 1/16]")
    support, weights = [], []
    for j, s in enumerate(z, start=1):
        half_j = tuple(HALF if k in (0, j) else Fraction(0) for k in range(m))
        fail = tuple(Fraction(int(k == 0)) for k in range(m))
        support.append(AgentType((half_j, half_j), (0, QUARTER)))
        support.append(AgentType((fail, half_j), (0, QUARTER)))
        weights.append((1 - 16 * eps * s) / (2 * (m - 1)))
        weights.append((1 + 16 * eps * s) / (2 * (m - 1)))
    return TypeDistribution(tuple(support), tuple(weights))


def dz_optimum(m: int, z: Sequence[int]) -> Contract:
    """Pays 1/2 on outcome ``j`` when ``z[j-1] = +1`` and nothing otherwise."""
    return Contract([0] + [HALF if s == 1 else 0 for s in z])


def rational_root(x, K: int, den: int = 10**12) -> Fraction:
    """``x ** (1/K)`` exactly when it is rational, else the smallest ``p/den`` whose K-th power is ``>= x``."""
    x = to_rational(x)
    if K < 1 or not 0 < x <= 1:
        raise ValueError("need K >= 1 and 0 < x <= 1")
    p, q = _int_root(x.numerator, K), _int_root(x.denominator, K)
    if p is not None and q is not None:
        return Fraction(p, q)
    k = math.ceil(float(x) ** (1 / K) * den)
    while Fraction(k - 1, den) ** K >= x:
        k -= 1
    while Fraction(k, den) ** K < x:
        k += 1
    return Fraction(k, den)


def _int_root(n: int, K: int) -> int | None:
    lo, hi = 0, 1 << (n.bit_length() // K + 1)
    while lo < hi:
        mid = (lo + hi) // 2
        if mid**K < n:
            lo = mid + 1
        else:
            hi = mid
    return lo if lo**K == n else None


@dataclass(frozen=True)
class ImpossibilityInstance:
    """Two types on rewards (0, 0, 1) that defeat any learner of unbounded contracts.

    ``D1`` is a point mass on ``good``.  ``D2`` keeps ``good`` with mass ``q``
    (the K-th root of delta) and otherwise yields ``null``, whose every action
    lands on the zero-reward outcome 0.
    """

    eps: Fraction
    delta: Fraction
    K: int
    q: Fraction
    eta: Fraction
    good: AgentType
    null: AgentType
    rewards: Rewards

    @property
    def D1(self) -> TypeDistribution:
        return TypeDistribution.point_mass(self.good)

    @property
    def D2(self) -> TypeDistribution:
        return TypeDistribution((self.good, self.null), (self.q, 1 - self.q))

    @property
    def t_star(self) -> Contract:
        """Pays only on outcome 0, just enough to make the costly action a tie."""
        return Contract((1 / (4 * self.eta), 0, 0))


def impossibility(eps, delta, K: int) -> ImpossibilityInstance:
    eps, delta = to_rational(eps), to_rational(delta)
    if not 0 <= eps < QUARTER:
        raise ValueError("eps must lie in [0, 1/4)")
    if not 0 < delta < 1:
        raise ValueError("delta must lie in (0, 1)")
    if K < 1:
        raise ValueError("K must be at least 1")
    q = rational_root(delta, K)
    eta = (QUARTER - eps) * (1 - q)
    good = AgentType(((0, HALF, HALF), (eta, 0, 1 - eta)), (0, QUARTER))
    null = AgentType(((1, 0, 0), (1, 0, 0)), (0, 0))
    return ImpossibilityInstance(eps, delta, K, q, eta, good, null, Rewards((0, 0, 1)))


def random_type(
    rng: np.random.Generator,
    n: int,
    m: int,
    den: int = 20,
    cost_den: int = 20,
    inf_prob: float = 0.0,
) -> AgentType:
    """Random rational type: rows are integer compositions of ``den``, costs are ``k/cost_den``."""
    rows = []
    for _ in range(n):
        cuts = np.sort(rng.integers(0, den + 1, size=m - 1))
        parts = np.diff(np.concatenate(([0], cuts, [den])))
        rows.append(tuple(Fraction(int(p), den) for p in parts))
    costs = [Fraction(0)]
    for _ in range(n - 1):
        if inf_prob and rng.random() < inf_prob:
            costs.append(INF)
        else:
            costs.append(Fraction(int(rng.integers(0, cost_den + 1)), cost_den))
    return AgentType(tuple(rows), tuple(costs))


def random_rewards(rng: np.random.Generator, m: int, den: int = 10) -> Rewards:
    """Rewards in ``[0, 1]`` with ``r_0 = 0`` and maximum exactly 1."""
    vals = [Fraction(int(rng.integers(0, den + 1)), den) for _ in range(m - 1)]
    vals[int(rng.integers(0, m - 1))] = Fraction(1)
    return Rewards((0, *vals))


def random_distribution(
    rng: np.random.Generator,
    size: int,
    n: int,
    m: int,
    den: int = 20,
    weight_den: int = 12,
) -> TypeDistribution:
    """``size`` random types with random positive rational weights."""
    types = tuple(random_type(rng, n, m, den) for _ in range(size))
    raw = [int(rng.integers(1, weight_den + 1)) for _ in range(size)]
    total = sum(raw)
    return TypeDistribution(types, tuple(Fraction(w, total) for w in raw))
