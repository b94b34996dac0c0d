"""Bounded contracts: direction nets, the discretized class and search oracles.

The discretized class consists of contracts ``r + sqrt(m) * beta * gamma``
where ``beta`` ranges over multiples of a step ``1/N`` and ``gamma`` over a
net of unit directions, intersected with the unit box.  Directions are built
by normalizing the primitive points of an integer grid, so every member has an
exact integer description ``(g, k)``: ``gamma = g / |g|`` and ``beta = k / N``.

The geometry uses floats.  Candidate contracts are snapped to a ``1e-9``
rational grid and then evaluated exactly.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from .batch import PaymentMatrix, expected_utilities
from .errors import ResourceCapError
from .model import (
    Contract,
    TypeDistribution,
    as_rewards,
    to_rational,
    welfare_bound,
)
from .spaces import DEFAULT_BATCH, BoxGrid, ContractSearchSpace

DEFAULT_CAP = 10**7
SNAP = 10**9


def _primitive_points(m: int, G: int) -> np.ndarray:
    """Nonzero integer points of ``[-G, G]^m`` whose entries have gcd 1, lexicographic."""
    axes = np.arange(-G, G + 1, dtype=np.int64)
    pts = np.stack(np.meshgrid(*([axes] * m), indexing="ij"), axis=-1).reshape(-1, m)
    g = np.gcd.reduce(np.abs(pts), axis=1)
    return pts[g == 1]


def net_resolution(m: int, eps: float) -> int:
    """Grid half-width ``G`` so that spacing ``1/G`` is at most ``eps / (2 sqrt(m))``."""
    return math.ceil(2 * math.sqrt(m) / eps)


@dataclass(frozen=True)
class DirectionNet:
    eps: Fraction
    grid: int
    generators: np.ndarray = field(repr=False)
    vectors: np.ndarray = field(repr=False)

    def __len__(self) -> int:
        return len(self.vectors)


def direction_net(m: int, eps) -> DirectionNet:
    """Unit vectors within angle ``eps`` of every direction in ``R^m``."""
    if m < 2:
        raise ValueError("m must be at least 2")
    eps = to_rational(eps)
    if not 0 < eps < Fraction(math.pi / 2):
        raise ValueError("eps must lie in (0, pi/2)")
    G = net_resolution(m, float(eps))
    gens = _primitive_points(m, G)
    vecs = gens / np.linalg.norm(gens, axis=1, keepdims=True)
    return DirectionNet(eps, G, gens, vecs)


def _snap(x: float) -> Fraction:
    return Fraction(round(x * SNAP), SNAP)


def _inv_step(m: int, eps: Fraction) -> int:
    # smallest N with N * eps >= 20 sqrt(m), decided exactly by squaring
    N = max(1, math.floor(20 * math.sqrt(m) / eps))
    while (N * eps) ** 2 < 400 * m:
        N += 1
    while N > 1 and ((N - 1) * eps) ** 2 >= 400 * m:
        N -= 1
    return N


class BoundedGrid(ContractSearchSpace):
    """Contracts ``r + sqrt(m) * (k/N) * g/|g|`` inside the unit box.

    ``k`` ranges over ``1..N`` and ``g`` over primitive integer points of
    ``[-G, G]^m``.  Full enumeration is allowed only when the size bound is
    within ``cap``; :meth:`witnesses` works at any size.
    """

    def __init__(self, r, N: int, G: int, eps=None, cap: int | None = DEFAULT_CAP):
        self.r = as_rewards(r)
        if self.r.max > 1:
            raise ValueError("bounded grids need rewards at most 1")
        self.m = self.r.m
        self.N = N
        self.G = G
        self.eps = eps
        self.cap = cap
        self._rf = np.array([float(v) for v in self.r.values])
        self._members: list[Contract] | None = None
        self._ints: np.ndarray | None = None

    @property
    def size_bound(self) -> int:
        return self.N * ((2 * self.G + 1) ** self.m - 1)

    def _point(self, g: Sequence[int], k: int) -> Contract | None:
        g = np.asarray(g, dtype=float)
        x = self._rf + math.sqrt(self.m) * (k / self.N) * g / np.linalg.norm(g)
        if np.any(x < -1e-12) or np.any(x > 1 + 1e-12):
            return None
        return Contract(_snap(v) for v in np.clip(x, 0.0, 1.0))

    def member(self, g: Sequence[int], k: int) -> Contract | None:
        """The member with direction generator ``g`` and step ``k``, or None outside the box."""
        g = [int(v) for v in g]
        if len(g) != self.m or not any(g) or max(abs(v) for v in g) > self.G:
            raise ValueError("generator out of range")
        if math.gcd(*g) != 1:
            raise ValueError("generator must be primitive")
        if not 1 <= k <= self.N:
            raise ValueError("step index out of range")
        return self._point(g, k)

    def _materialize(self) -> None:
        if self._members is not None:
            return
        cap = DEFAULT_CAP if self.cap is None else self.cap
        if self.size_bound > cap:
            raise ResourceCapError(
                f"bounded grid has up to {self.size_bound} members, cap is {cap}"
            )
        gens = _primitive_points(self.m, self.G).astype(float)
        gamma = gens / np.linalg.norm(gens, axis=1, keepdims=True)
        ks = np.arange(1, self.N + 1, dtype=float) / self.N * math.sqrt(self.m)
        pts = self._rf[None, None, :] + gamma[:, None, :] * ks[None, :, None]
        pts = pts.reshape(-1, self.m)
        inside = np.all((pts >= -1e-12) & (pts <= 1 + 1e-12), axis=1)
        ints = np.rint(np.clip(pts[inside], 0.0, 1.0) * SNAP).astype(np.int64)
        _, first = np.unique(ints, axis=0, return_index=True)
        ints = ints[np.sort(first)]
        self._ints = ints
        self._members = [Contract(Fraction(int(v), SNAP) for v in row) for row in ints]

    def __len__(self) -> int:
        self._materialize()
        return len(self._members)

    def contract_at(self, k: int) -> Contract:
        self._materialize()
        return self._members[k]

    def payment_matrix(self, start: int, stop: int) -> PaymentMatrix:
        self._materialize()
        return PaymentMatrix(self._ints[start:stop], SNAP)

    def witnesses(self, target: Sequence, spread: int = 1) -> list[Contract]:
        """Members close to ``target``, built from neighbouring generators and steps."""
        x = np.array([float(v) for v in target])
        d = x - self._rf
        norm = float(np.linalg.norm(d))
        if norm < 1e-15:
            d = 0.5 - self._rf
            norm = float(np.linalg.norm(d))
        u = d / norm
        v = u / np.max(np.abs(u)) * self.G
        choices = [sorted({math.floor(c), math.ceil(c)}) for c in v]
        k0 = norm * self.N / math.sqrt(self.m)
        ks = range(max(1, math.floor(k0) - spread), min(self.N, math.ceil(k0) + spread) + 1)
        out: dict[Contract, None] = {}
        for combo in itertools.product(*choices):
            g = [max(-self.G, min(self.G, int(c))) for c in combo]
            if not any(g):
                continue
            div = math.gcd(*g)
            g = [c // div for c in g]
            for k in ks:
                t = self._point(g, k)
                if t is not None:
                    out[t] = None
        return list(out)


def bounded_grid(r, eps, cap: int | None = DEFAULT_CAP, lazy: bool = False) -> BoundedGrid:
    """The discretized bounded class for accuracy ``eps``.

    The step is ``1/N`` with ``N`` the smallest integer such that
    ``1/N <= eps / (20 sqrt(m))``, and directions come from a net of angular
    resolution ``1/N**2``.  Raises :class:`ResourceCapError` when the size bound
    exceeds ``cap`` unless ``lazy`` is set, in which case only witness queries
    are available.
    """
    r = as_rewards(r)
    eps = to_rational(eps)
    if not 0 < eps <= 1:
        raise ValueError("eps must lie in (0, 1]")
    N = _inv_step(r.m, eps)
    G = net_resolution(r.m, 1 / N**2)
    grid = BoundedGrid(r, N, G, eps=eps, cap=cap)
    if not lazy and cap is not None and grid.size_bound > cap:
        raise ResourceCapError(f"bounded grid has up to {grid.size_bound} members, cap is {cap}")
    return grid


def _better(value: Fraction, t: Contract, best) -> bool:
    return best is None or value > best[1] or (value == best[1] and t < best[0])


def opt_over_set(
    D: TypeDistribution, S: ContractSearchSpace, r, rho=0, batch: int = DEFAULT_BATCH
) -> tuple[Contract, Fraction]:
    """Best contract of ``S`` for ``D`` by exhaustive exact enumeration.

    With ``rho = 0`` the result is an exact argmax, ties going to the
    lexicographically smallest payment vector.  With ``rho > 0`` the scan stops
    early once a contract is within ``rho`` of the welfare upper bound, which
    is within ``rho`` of the maximum over ``S``.
    """
    r = as_rewards(r)
    rho = to_rational(rho)
    if rho < 0:
        raise ValueError("rho must be nonnegative")
    stop_at = welfare_bound(D, r) - rho if rho > 0 else None
    best = None
    for start, pm in S.batches(batch):
        if len(pm) == 0:
            continue
        values, den = expected_utilities(D, r, pm)
        top = values.max()
        value = Fraction(int(top), den)
        ties = np.flatnonzero(values == top)
        if S.lexicographic:
            t = S.contract_at(start + int(ties[0]))
        else:
            t = min(S.contract_at(start + int(k)) for k in ties)
        if _better(value, t, best):
            best = (t, value)
        if stop_at is not None and best[1] >= stop_at:
            break
    if best is None:
        raise ValueError("empty search space")
    return best


def _box_step(m: int, budget: int = 200_000) -> Fraction:
    k = 100
    while (k + 1) ** m > budget:
        k -= 1
    return Fraction(1, k)


def witness_search(
    D: TypeDistribution, grid: BoundedGrid, r, seeds: Sequence[Contract], spread: int = 1
) -> tuple[Contract, Fraction]:
    """Best grid member among the witnesses of ``seeds``, evaluated exactly.

    Its value is a certified lower bound on the optimum over the grid.
    """
    pool: dict[Contract, None] = {}
    for s in seeds:
        for t in grid.witnesses(s, spread):
            pool[t] = None
    if not pool:
        raise ValueError("no grid member near the seeds")
    cands = list(pool)
    values, den = expected_utilities(D, r, PaymentMatrix.from_contracts(cands))
    best = None
    for t, v in zip(cands, values):
        value = Fraction(int(v), den)
        if _better(value, t, best):
            best = (t, value)
    return best


def top_contracts(D: TypeDistribution, S: ContractSearchSpace, r, k: int) -> list[Contract]:
    """The ``k`` best contracts of ``S`` for ``D`` (exact values)."""
    best: list[tuple] = []
    for start, pm in S.batches():
        values, den = expected_utilities(D, r, pm)
        order = np.argsort(-values.astype(float), kind="stable")[: 4 * k]
        for j in order:
            best.append((Fraction(int(values[j]), den), start + int(j)))
        best.sort(key=lambda e: (-e[0], e[1]))
        best = best[:k]
    return [S.contract_at(i) for _, i in best]


def certified_opt(
    D: TypeDistribution, grid: BoundedGrid, r, rho, seeds: int = 32
) -> tuple[Contract, Fraction]:
    """Approximation oracle for a grid too large to enumerate.

    Searches witnesses of the best box-grid contracts and returns one whose
    value is within ``rho`` of the welfare upper bound (hence within ``rho``
    of the grid optimum).  Raises :class:`ResourceCapError` if no such
    certificate is found.
    """
    r = as_rewards(r)
    box = BoxGrid(grid.m, _box_step(grid.m))
    t, value = witness_search(D, grid, r, top_contracts(D, box, r, seeds))
    bound = welfare_bound(D, r)
    if value < bound - to_rational(rho):
        raise ResourceCapError(
            f"grid too large to enumerate and best witness value {float(value):.6f} "
            f"is not within rho of the upper bound {float(bound):.6f}"
        )
    return t, value


def erm_bounded(samples, r, S: ContractSearchSpace, rho=0) -> Contract:
    """Feed the empirical distribution of ``samples`` to the oracle for ``S``."""
    D = TypeDistribution.empirical(samples)
    if isinstance(S, BoundedGrid) and S.size_bound > (S.cap or DEFAULT_CAP):
        return certified_opt(D, S, r, rho)[0]
    return opt_over_set(D, S, r, rho)[0]
