"""Finite, enumerable sets of contracts searched by the oracles and learners."""

from __future__ import annotations

import itertools
import math
from abc import ABC, abstractmethod
from fractions import Fraction
from typing import Iterable, Iterator, Sequence

import numpy as np

from .batch import PaymentMatrix
from .model import Contract, LinearContract, as_rewards, to_rational

DEFAULT_BATCH = 1 << 15


class ContractSearchSpace(ABC):
    """A finite set of contracts with a fixed, repeatable enumeration order."""

    m: int
    # True when the enumeration order is lexicographic in the payment vector
    lexicographic: bool = False

    @abstractmethod
    def __len__(self) -> int: ...

    @abstractmethod
    def contract_at(self, k: int) -> Contract: ...

    def __iter__(self) -> Iterator[Contract]:
        for k in range(len(self)):
            yield self.contract_at(k)

    def payment_matrix(self, start: int, stop: int) -> PaymentMatrix:
        return PaymentMatrix.from_contracts([self.contract_at(k) for k in range(start, stop)])

    def batches(self, size: int = DEFAULT_BATCH) -> Iterator[tuple[int, PaymentMatrix]]:
        """Yield ``(offset, matrix)`` blocks covering the whole space in order."""
        total = len(self)
        for start in range(0, total, size):
            yield start, self.payment_matrix(start, min(start + size, total))


class ExplicitSpace(ContractSearchSpace):
    def __init__(self, contracts: Iterable):
        self.contracts = tuple(c if isinstance(c, Contract) else Contract(c) for c in contracts)
        if not self.contracts:
            raise ValueError("empty contract set")
        self.m = len(self.contracts[0])
        if any(len(c) != self.m for c in self.contracts):
            raise ValueError("contracts must share a length")

    def __len__(self) -> int:
        return len(self.contracts)

    def contract_at(self, k: int) -> Contract:
        return self.contracts[k]

    def __iter__(self):
        return iter(self.contracts)


class BoxGrid(ContractSearchSpace):
    """All of ``{0, step, 2*step, ...}^m`` inside the unit box, in lexicographic order."""

    lexicographic = True

    def __init__(self, m: int, step):
        step = to_rational(step)
        if not 0 < step <= 1:
            raise ValueError("step must lie in (0, 1]")
        if m < 1:
            raise ValueError("m must be positive")
        self.m = m
        self.step = step
        self.levels = int(1 / step) + 1

    def __len__(self) -> int:
        return self.levels**self.m

    def _digits(self, k: int) -> list[int]:
        out = []
        for _ in range(self.m):
            k, d = divmod(k, self.levels)
            out.append(d)
        return out[::-1]

    def contract_at(self, k: int) -> Contract:
        if not 0 <= k < len(self):
            raise IndexError(k)
        return Contract(d * self.step for d in self._digits(k))

    def __iter__(self):
        values = [d * self.step for d in range(self.levels)]
        for combo in itertools.product(values, repeat=self.m):
            yield Contract(combo)

    def payment_matrix(self, start: int, stop: int) -> PaymentMatrix:
        idx = np.arange(start, stop, dtype=np.int64)
        cols = []
        for _ in range(self.m):
            idx, d = np.divmod(idx, self.levels)
            cols.append(d)
        digits = np.stack(cols[::-1], axis=1)
        return PaymentMatrix(digits * self.step.numerator, self.step.denominator)


class LinearSpace(ContractSearchSpace):
    """Linear contracts ``alpha * r`` for the given sorted alphas."""

    lexicographic = True

    def __init__(self, alphas: Sequence, r):
        self.r = as_rewards(r)
        self.alphas = tuple(sorted({to_rational(a) for a in alphas}))
        if not self.alphas:
            raise ValueError("no alphas")
        self.m = self.r.m
        self._full: PaymentMatrix | None = None

    def __len__(self) -> int:
        return len(self.alphas)

    def payment_matrix(self, start: int, stop: int) -> PaymentMatrix:
        if self._full is None:
            a_den = math.lcm(*(a.denominator for a in self.alphas))
            r_den = math.lcm(*(v.denominator for v in self.r.values))
            a = [x.numerator * (a_den // x.denominator) for x in self.alphas]
            rv = [v.numerator * (r_den // v.denominator) for v in self.r.values]
            dtype = np.int64 if max(a) * max(rv) < 2**62 else object
            ints = np.outer(np.array(a, dtype=dtype), np.array(rv, dtype=dtype))
            self._full = PaymentMatrix(ints, a_den * r_den)
        return PaymentMatrix(self._full.ints[start:stop], self._full.den)

    def contract_at(self, k: int) -> Contract:
        return LinearContract(self.alphas[k]).contract(self.r)

    def alpha_of(self, t: Sequence[Fraction]) -> Fraction:
        j = max(range(self.m), key=lambda j: self.r[j])
        return t[j] / self.r[j]
