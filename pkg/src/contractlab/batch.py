"""Vectorized exact evaluation of many contracts at once.

Payments, probabilities and costs are scaled to integers over common
denominators, so best responses and principal utilities are computed with
integer matrix products.  ``int64`` is used when a magnitude bound shows the
products cannot overflow; otherwise Python integers (``dtype=object``) keep the
results exact.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from .model import INF, AgentType, Rewards, TypeDistribution, as_rewards

_SAFE = 2**62


def _lcm_of(values) -> int:
    return math.lcm(1, *(v.denominator for v in values))


def _int_matrix(rows, den: int) -> list[list[int]]:
    return [[x.numerator * (den // x.denominator) for x in row] for row in rows]


def _array(data, bound: int) -> np.ndarray:
    return np.array(data, dtype=np.int64 if bound < _SAFE else object)


@dataclass(frozen=True)
class PaymentMatrix:
    """K contracts as a K x m integer array over one common denominator."""

    ints: np.ndarray
    den: int

    @classmethod
    def from_contracts(cls, contracts: Sequence[Sequence[Fraction]]) -> PaymentMatrix:
        den = math.lcm(1, *(x.denominator for t in contracts for x in t))
        data = _int_matrix(contracts, den)
        bound = max((abs(v) for row in data for v in row), default=0)
        arr = _array(data, bound)
        if arr.ndim != 2:
            arr = arr.reshape(len(contracts), -1)
        return cls(arr, den)

    def __len__(self) -> int:
        return self.ints.shape[0]

    def max_abs(self) -> int:
        return int(abs(self.ints).max()) if self.ints.size else 0


def _rescale(pm: PaymentMatrix, factor: int) -> np.ndarray:
    if factor == 1:
        return pm.ints
    bound = pm.max_abs() * factor
    if bound < _SAFE and pm.ints.dtype == np.int64:
        return pm.ints * factor
    return pm.ints.astype(object) * factor


def type_utilities(theta: AgentType, r: Rewards, pm: PaymentMatrix) -> tuple[np.ndarray, int]:
    """Principal utility of ``theta`` under every contract of ``pm``.

    Returns integer numerators and the denominator they share.
    """
    r = as_rewards(r)
    if len(pm) == 0:
        return np.zeros(0, dtype=np.int64), 1
    actions = [i for i in range(theta.n) if theta.c[i] != INF]
    rows = [theta.f[i] for i in actions]
    costs = [theta.c[i] for i in actions]

    df = math.lcm(1, *(p.denominator for row in rows for p in row))
    dc = _lcm_of(costs)
    dt = math.lcm(pm.den, _lcm_of(r.values))

    F = _int_matrix(rows, df)
    C = [c.numerator * (dc // c.denominator) for c in costs]
    R = [v.numerator * (dt // v.denominator) for v in r.values]
    T = _rescale(pm, dt // pm.den)

    tmax = max(pm.max_abs() * (dt // pm.den), max(R))
    m = theta.m
    bound = max(
        dc * m * tmax * df + df * dt * max(C),
        m * df * 2 * tmax,
    )
    if bound >= _SAFE or T.dtype == object:
        T = T.astype(object)
        Fa = np.array(F, dtype=object)
        Ca = np.array(C, dtype=object)
        Ra = np.array(R, dtype=object)
    else:
        Fa = np.array(F, dtype=np.int64)
        Ca = np.array(C, dtype=np.int64)
        Ra = np.array(R, dtype=np.int64)

    paid = T @ Fa.T  # K x n, expected payment scaled by df*dt
    agent = dc * paid - (df * dt) * Ca[None, :]
    principal = (Fa @ Ra)[None, :] - paid
    top = agent.max(axis=1)
    ties = agent == top[:, None]
    floor = principal.min() - 1
    best = np.where(ties, principal, floor).max(axis=1)
    return best, df * dt


def expected_utilities(D: TypeDistribution, r: Rewards, pm: PaymentMatrix) -> tuple[np.ndarray, int]:
    """Expected principal utility of every contract in ``pm`` under ``D``.

    Returns integer numerators and their common denominator.
    """
    parts = []
    for theta, w in D.items():
        if w:
            vals, den = type_utilities(theta, r, pm)
            parts.append((vals, den, w))
    common = math.lcm(1, *(den * w.denominator for _, den, w in parts))
    coefs = [w.numerator * (common // (den * w.denominator)) for _, den, w in parts]
    bound = sum(
        abs(k) * (int(abs(v).max()) if len(v) else 0)
        for k, (v, _, _) in zip(coefs, parts)
    )
    dtype = np.int64 if bound < _SAFE and all(v.dtype == np.int64 for v, _, _ in parts) else object
    total = np.zeros(len(pm), dtype=dtype)
    for k, (vals, _, _) in zip(coefs, parts):
        total = total + (vals.astype(dtype) if vals.dtype != dtype else vals) * k
    return total, common


def utilities_as_fractions(values: np.ndarray, den: int) -> list[Fraction]:
    return [Fraction(int(v), den) for v in values]
