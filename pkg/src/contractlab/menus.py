"""Menus of contracts: the agent picks both a contract from the menu and an action."""

from __future__ import annotations

import itertools
from collections import Counter
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from .errors import ResourceCapError
from .model import (
    INF,
    AgentType,
    Contract,
    TypeDistribution,
    as_rewards,
    dot,
    principal_action_utility,
    to_rational,
    welfare_bound,
)
from .spaces import ContractSearchSpace

DEFAULT_MENU_CAP = 10**6


@dataclass(frozen=True)
class Menu:
    """A nonempty set of contracts, stored sorted so order never matters."""

    contracts: tuple[Contract, ...]

    def __post_init__(self):
        cs = tuple(sorted(c if isinstance(c, Contract) else Contract(c) for c in self.contracts))
        object.__setattr__(self, "contracts", cs)
        if not cs:
            raise ValueError("a menu needs at least one contract")
        if len({len(c) for c in cs}) != 1:
            raise ValueError("menu contracts must share a length")

    @classmethod
    def duplicate(cls, t, K: int) -> Menu:
        return cls((Contract(t),) * K)

    def __len__(self) -> int:
        return len(self.contracts)


def menu_choice(theta: AgentType, M: Menu, r) -> tuple[int, int]:
    """``(contract index, action)`` maximizing the agent's utility.

    Ties go to the principal's higher utility, then to the smallest pair.
    Indices refer to the menu's sorted order.
    """
    r = as_rewards(r)
    best = None
    best_key = None
    for k, t in enumerate(M.contracts):
        if len(t) != theta.m:
            raise ValueError("contract length does not match the type")
        for i, (row, c) in enumerate(zip(theta.f, theta.c)):
            if c == INF:
                continue
            ua = dot(row, t) - c
            if best_key is None or ua > best_key[0]:
                best, best_key = (k, i), (ua, None)
            elif ua == best_key[0]:
                cur = best_key[1]
                if cur is None:
                    cur = principal_action_utility(theta, M.contracts[best[0]], best[1], r)
                up = principal_action_utility(theta, t, i, r)
                if up > cur:
                    best, best_key = (k, i), (ua, up)
                else:
                    best_key = (ua, cur)
    return best


def menu_utility(theta: AgentType, M: Menu, r) -> Fraction:
    k, i = menu_choice(theta, M, r)
    return principal_action_utility(theta, M.contracts[k], i, r)


def _pair_tables(theta: AgentType, contracts: Sequence[Contract], r):
    """Per contract, the (agent, principal) utility of every available action."""
    rewards = theta.rewards_of(r)
    out = []
    for t in contracts:
        row = []
        for i, (f, c) in enumerate(zip(theta.f, theta.c)):
            if c == INF:
                continue
            paid = dot(f, t)
            row.append((paid - c, rewards[i] - paid))
        out.append(row)
    return out


def opt_menu(
    D: TypeDistribution,
    r,
    K: int,
    S: ContractSearchSpace,
    rho=0,
    cap: int = DEFAULT_MENU_CAP,
) -> tuple[Menu, Fraction]:
    """Best menu of ``K`` contracts drawn from ``S`` (with repetition) for ``D``.

    Menus are enumerated as sorted ``K``-multisets in lexicographic order; the
    first menu with the highest value wins.  With ``rho > 0`` the search stops
    at the first menu within ``rho`` of the welfare upper bound.
    """
    r = as_rewards(r)
    rho = to_rational(rho)
    if K < 1:
        raise ValueError("K must be positive")
    if len(S) ** K > cap:
        raise ResourceCapError(f"|S|^K = {len(S) ** K} exceeds the cap {cap}")
    contracts = sorted(S)
    tables = [(w, _pair_tables(theta, contracts, r)) for theta, w in D.items() if w]
    stop_at = welfare_bound(D, r) - rho if rho > 0 else None

    best_menu = best_value = None
    for idx in itertools.combinations_with_replacement(range(len(contracts)), K):
        value = Fraction(0)
        for w, table in tables:
            # (agent, principal) pairs compare as tuples: the agent's choice
            # with ties resolved toward the principal
            top = max(pair for j in idx for pair in table[j])
            value += w * top[1]
        if best_value is None or value > best_value:
            best_menu, best_value = idx, value
            if stop_at is not None and value >= stop_at:
                break
    return Menu(tuple(contracts[j] for j in best_menu)), best_value


def erm_menu(
    samples: Sequence[AgentType],
    r,
    K: int,
    S: ContractSearchSpace,
    rho=0,
    cap: int = DEFAULT_MENU_CAP,
) -> Menu:
    """Empirically best menu: :func:`opt_menu` on the empirical distribution."""
    return opt_menu(TypeDistribution.empirical(samples), r, K, S, rho, cap)[0]


def menu_empirical_value(samples: Sequence[AgentType], M: Menu, r) -> Fraction:
    counts = Counter(samples)
    total = sum(counts.values())
    return sum((k * menu_utility(theta, M, r) for theta, k in counts.items()), Fraction(0)) / total
