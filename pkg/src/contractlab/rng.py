"""Seeded counter-based random streams (Philox); stream ``k`` of seed ``s`` is independent of the others."""

from __future__ import annotations

import numpy as np

from .model import TypeDistribution


def make_rng(seed: int, *stream: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([seed, *stream])))


def sample_indices(D: TypeDistribution, size: int, rng: np.random.Generator) -> np.ndarray:
    """Indices into ``D.support`` drawn i.i.d. from the weights."""
    p = np.array([float(w) for w in D.weights])
    return rng.choice(len(p), size=size, p=p / p.sum())
