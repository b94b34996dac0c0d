"""Exact evaluation of the hidden-action principal-agent model.

An agent type is a production matrix ``f`` (one outcome distribution per
action) together with action costs ``c``.  A contract pays ``t[j]`` when
outcome ``j`` is realized.  The agent picks the action maximizing its expected
payment minus cost; ties go to the action that is better for the principal,
then to the smallest action index.

All arithmetic is carried out on :class:`fractions.Fraction` values.  Costs may
be ``math.inf`` to mark an action that is unavailable to the agent.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass
from fractions import Fraction
from numbers import Rational
from typing import Iterable, Sequence, Union

INF = math.inf

Cost = Union[Fraction, float]


def to_rational(x) -> Fraction:
    """Convert an exact number to a ``Fraction``.

    Accepts ints, Fractions, other ``numbers.Rational`` values and strings such
    as ``"3/4"`` or ``"0.25"``.  Finite floats are converted exactly (binary
    value); use :mod:`contractlab.io` to read human-written decimals.
    """
    if isinstance(x, Fraction):
        return x
    if isinstance(x, bool):
        raise TypeError("booleans are not numbers here")
    if isinstance(x, int):
        return Fraction(x)
    if isinstance(x, str):
        return Fraction(x.strip())
    if isinstance(x, float):
        if not math.isfinite(x):
            raise ValueError(f"expected a finite number, got {x}")
        return Fraction(x)
    if isinstance(x, Rational):
        return Fraction(x.numerator, x.denominator)
    raise TypeError(f"cannot convert {x!r} to a rational")


def to_cost(x) -> Cost:
    """Like :func:`to_rational` but maps ``inf`` / ``"inf"`` to ``math.inf``."""
    if isinstance(x, str) and x.strip().lower() in ("inf", "+inf", "infinity"):
        return INF
    if isinstance(x, float) and x == INF:
        return INF
    return to_rational(x)


def dot(a: Sequence[Fraction], b: Sequence[Fraction]) -> Fraction:
    return sum((x * y for x, y in zip(a, b)), Fraction(0))


@dataclass(frozen=True)
class Rewards:
    """Reward vector over outcomes; outcome 0 always pays nothing."""

    values: tuple[Fraction, ...]

    def __post_init__(self):
        vals = tuple(to_rational(v) for v in self.values)
        object.__setattr__(self, "values", vals)
        if len(vals) < 2:
            raise ValueError("need at least two outcomes")
        if vals[0] != 0:
            raise ValueError("reward of outcome 0 must be 0")
        if any(v < 0 for v in vals):
            raise ValueError("rewards must be nonnegative")
        if not any(v > 0 for v in vals):
            raise ValueError("at least one reward must be positive")

    @property
    def m(self) -> int:
        return len(self.values)

    @property
    def max(self) -> Fraction:
        return max(self.values)

    def __iter__(self):
        return iter(self.values)

    def __len__(self) -> int:
        return len(self.values)

    def __getitem__(self, j):
        return self.values[j]


def as_rewards(r) -> Rewards:
    return r if isinstance(r, Rewards) else Rewards(tuple(r))


@dataclass(frozen=True)
class AgentType:
    """Production matrix ``f`` (n x m, row-stochastic) and cost vector ``c``."""

    f: tuple[tuple[Fraction, ...], ...]
    c: tuple[Cost, ...]

    def __post_init__(self):
        f = tuple(tuple(to_rational(p) for p in row) for row in self.f)
        c = tuple(to_cost(x) for x in self.c)
        object.__setattr__(self, "f", f)
        object.__setattr__(self, "c", c)
        if not f:
            raise ValueError("an agent type needs at least one action")
        if len(c) != len(f):
            raise ValueError(f"{len(f)} rows but {len(c)} costs")
        m = len(f[0])
        for i, row in enumerate(f):
            if len(row) != m:
                raise ValueError(f"row {i} has length {len(row)}, expected {m}")
            if any(p < 0 for p in row):
                raise ValueError(f"row {i} has a negative probability")
            if sum(row) != 1:
                raise ValueError(f"row {i} sums to {sum(row)}, not 1")
        if c[0] != 0:
            raise ValueError("action 0 must have cost 0")
        if any(x < 0 for x in c):
            raise ValueError("costs must be nonnegative")

    @property
    def n(self) -> int:
        return len(self.f)

    @property
    def m(self) -> int:
        return len(self.f[0])

    def rewards_of(self, r: Rewards) -> tuple[Fraction, ...]:
        """Expected reward ``f_i . r`` of every action."""
        return tuple(dot(row, r.values) for row in self.f)


class Contract(tuple):
    """Nonnegative payment vector; compares and hashes as a plain tuple."""

    def __new__(cls, payments: Iterable):
        vals = tuple(to_rational(p) for p in payments)
        if any(v < 0 for v in vals):
            raise ValueError("payments must be nonnegative")
        return super().__new__(cls, vals)

    def __repr__(self) -> str:
        return "Contract(" + ", ".join(str(v) for v in self) + ")"

    @classmethod
    def zero(cls, m: int) -> Contract:
        return cls([0] * m)


@dataclass(frozen=True, order=True)
class LinearContract:
    """Pays the fraction ``alpha`` of every realized reward."""

    alpha: Fraction

    def __post_init__(self):
        a = to_rational(self.alpha)
        object.__setattr__(self, "alpha", a)
        if not 0 <= a <= 1:
            raise ValueError(f"alpha must lie in [0, 1], got {a}")

    def contract(self, r) -> Contract:
        return Contract(self.alpha * v for v in as_rewards(r).values)


def _payments(t, r: Rewards | None, m: int) -> Contract:
    if isinstance(t, LinearContract):
        if r is None:
            raise ValueError("rewards are required to evaluate a linear contract")
        t = t.contract(r)
    elif not isinstance(t, Contract):
        t = Contract(t)
    if len(t) != m:
        raise ValueError(f"contract has length {len(t)}, type has {m} outcomes")
    return t


def _check_rewards(r: Rewards, m: int) -> None:
    if r.m != m:
        raise ValueError(f"rewards have length {r.m}, type has {m} outcomes")


def _check_action(theta: AgentType, i: int) -> None:
    if not 0 <= i < theta.n:
        raise IndexError(f"action {i} out of range for {theta.n} actions")


def agent_utility(theta: AgentType, t, i: int, r=None) -> Cost:
    """Expected payment of action ``i`` minus its cost (``-inf`` if unavailable)."""
    _check_action(theta, i)
    t = _payments(t, None if r is None else as_rewards(r), theta.m)
    if theta.c[i] == INF:
        return -INF
    return dot(theta.f[i], t) - theta.c[i]


def principal_action_utility(theta: AgentType, t, i: int, r) -> Fraction:
    """Expected reward minus expected payment when the agent plays ``i``."""
    _check_action(theta, i)
    r = as_rewards(r)
    _check_rewards(r, theta.m)
    t = _payments(t, r, theta.m)
    return sum(
        (p * (rj - tj) for p, rj, tj in zip(theta.f[i], r.values, t)), Fraction(0)
    )


def best_response(theta: AgentType, t, r) -> int:
    """Action maximizing agent utility; ties favor the principal, then the smallest index."""
    r = as_rewards(r)
    _check_rewards(r, theta.m)
    t = _payments(t, r, theta.m)
    best = -1
    best_ua = best_up = None
    for i, (row, cost) in enumerate(zip(theta.f, theta.c)):
        if cost == INF:
            continue
        ua = dot(row, t) - cost
        if best < 0 or ua > best_ua:
            best, best_ua, best_up = i, ua, None
        elif ua == best_ua:
            if best_up is None:
                best_up = principal_action_utility(theta, t, best, r)
            up = principal_action_utility(theta, t, i, r)
            if up > best_up:
                best, best_up = i, up
    return best


def principal_utility(theta: AgentType, t, r) -> Fraction:
    r = as_rewards(r)
    t = _payments(t, r, theta.m)
    return principal_action_utility(theta, t, best_response(theta, t, r), r)


def principal_reward(theta: AgentType, t, r) -> Fraction:
    """Expected reward ``f_i . r`` at the agent's best response."""
    r = as_rewards(r)
    return dot(theta.f[best_response(theta, t, r)], r.values)


@dataclass(frozen=True)
class TypeDistribution:
    """Finite-support distribution over agent types with exact weights."""

    support: tuple[AgentType, ...]
    weights: tuple[Fraction, ...]

    def __post_init__(self):
        support = tuple(self.support)
        weights = tuple(to_rational(w) for w in self.weights)
        object.__setattr__(self, "support", support)
        object.__setattr__(self, "weights", weights)
        if not support:
            raise ValueError("support must be nonempty")
        if len(weights) != len(support):
            raise ValueError("one weight per support type is required")
        if any(w < 0 for w in weights):
            raise ValueError("weights must be nonnegative")
        if sum(weights) != 1:
            raise ValueError(f"weights sum to {sum(weights)}, not 1")
        if len({theta.m for theta in support}) != 1:
            raise ValueError("all types must share the number of outcomes")

    @property
    def m(self) -> int:
        return self.support[0].m

    @classmethod
    def point_mass(cls, theta: AgentType) -> TypeDistribution:
        return cls((theta,), (Fraction(1),))

    @classmethod
    def uniform(cls, types: Sequence[AgentType]) -> TypeDistribution:
        return cls(tuple(types), (Fraction(1, len(types)),) * len(types))

    @classmethod
    def empirical(cls, samples: Iterable[AgentType]) -> TypeDistribution:
        """Each distinct sample gets mass equal to its frequency."""
        counts = Counter(samples)
        if not counts:
            raise ValueError("no samples")
        total = sum(counts.values())
        return cls(tuple(counts), tuple(Fraction(k, total) for k in counts.values()))

    def items(self):
        return zip(self.support, self.weights)


def expected_principal_utility(D: TypeDistribution, t, r) -> Fraction:
    r = as_rewards(r)
    t = _payments(t, r, D.m)
    return sum(
        (w * principal_utility(theta, t, r) for theta, w in D.items() if w),
        Fraction(0),
    )


def welfare_bound(D: TypeDistribution, r) -> Fraction:
    """Upper bound on the principal's utility under any contract.

    Limited liability makes the agent's utility nonnegative, so the principal
    never earns more than the best expected surplus ``f_i . r - c_i``.
    """
    r = as_rewards(r)
    total = Fraction(0)
    for theta, w in D.items():
        rewards = theta.rewards_of(r)
        total += w * max(x - c for x, c in zip(rewards, theta.c) if c != INF)
    return total


def to_binary(theta: AgentType, r) -> AgentType:
    """Collapse a type to two outcomes with the same linear-contract behavior.

    Action ``i`` succeeds with probability ``(f_i . r) / R`` where ``R`` is the
    largest reward.  Evaluate the result against :func:`binary_rewards`.
    """
    r = as_rewards(r)
    _check_rewards(r, theta.m)
    top = r.max
    rows = []
    for x in theta.rewards_of(r):
        p = x / top
        rows.append((1 - p, p))
    return AgentType(tuple(rows), theta.c)


def binary_rewards(r) -> Rewards:
    return Rewards((Fraction(0), as_rewards(r).max))
