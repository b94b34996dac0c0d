"""Experiment runners: instance generation, sample-complexity sweeps,
representation-error sweeps, online regret and the unbounded-payment demo.

Trials are independent and may run in a process pool (``CONTRACTLAB_THREADS``
sets the worker count); results are always gathered in trial order, and trial
``k`` draws from the random substream ``(seed, ..., k)``, so output does not
depend on the worker count.
"""

from __future__ import annotations

import csv
import functools
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from . import constructions as cons
from .bounded import BoundedGrid, bounded_grid, opt_over_set, top_contracts, witness_search
from .io import InstanceFile
from .linear import critical_values, eps_grid, erm_linear_counts, opt_linear, opt_linear_grid
from .model import (
    INF,
    AgentType,
    Contract,
    Rewards,
    TypeDistribution,
    as_rewards,
    expected_principal_utility,
    principal_action_utility,
    to_rational,
)
from .online import OnlineRun, RegretSummary, fit_loglog_slope, ftl_run, regret_summary
from .pdim import bitmask_shatter_instance, grid_forcing_distribution, grid_forcing_optimum
from .rng import make_rng, sample_indices
from .spaces import BoxGrid, LinearSpace

THREADS_ENV = "CONTRACTLAB_THREADS"


def worker_count() -> int:
    raw = os.environ.get(THREADS_ENV)
    if raw:
        try:
            return max(1, int(raw))
        except ValueError:
            raise ValueError(f"{THREADS_ENV} must be an integer, got {raw!r}") from None
    return os.cpu_count() or 1


def parallel_map(fn: Callable, items: Sequence, workers: int | None = None) -> list:
    """``[fn(x) for x in items]``, possibly in worker processes, in input order."""
    workers = worker_count() if workers is None else workers
    if workers <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    chunk = max(1, len(items) // (4 * workers))
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items, chunksize=chunk))


@dataclass(frozen=True)
class ExperimentConfig:
    construction: str = "d1-linear"
    params: dict = field(default_factory=dict)
    learner: str = "critical"
    eps: tuple = ()
    delta: Fraction = Fraction(1, 10)
    sample_sizes: tuple[int, ...] = ()
    T: int = 4096
    seed: int = 0
    trials: int = 100
    out: str | None = None


# -- instance generation -----------------------------------------------------

CONSTRUCTIONS = (
    "theta1",
    "theta2",
    "d1-linear",
    "d2-linear",
    "dz-bounded",
    "impossibility",
    "grid-forcing",
    "bitmask-shatter",
    "random",
)


def distribution_of(cid: str, params: dict) -> tuple[TypeDistribution, Rewards]:
    """The type distribution and rewards of a named construction."""
    inst = gen_construction(cid, params)
    return inst.distribution, inst.rewards


def gen_construction(cid: str, params: dict | None = None) -> InstanceFile:
    """Exact instance of a named construction.  Unused parameters are ignored."""
    p = dict(params or {})
    meta: dict = {"construction": cid}
    if cid in ("theta1", "theta2"):
        theta = cons.theta1() if cid == "theta1" else cons.theta2()
        return InstanceFile(cons.BINARY, (theta,), (Fraction(1),), meta=meta)
    if cid in ("d1-linear", "d2-linear"):
        eps = to_rational(_need(p, "eps", cid))
        D = cons.d1_linear(eps) if cid == "d1-linear" else cons.d2_linear(eps)
        meta["eps"] = str(eps)
        return InstanceFile(cons.BINARY, D.support, D.weights, meta=meta)
    if cid == "dz-bounded":
        m = int(p.get("m", 3))
        eps = to_rational(_need(p, "eps", cid))
        z = tuple(int(s) for s in p.get("z", (1,) * (m - 1)))
        D = cons.dz_bounded(m, eps, z)
        meta.update(eps=str(eps), m=m, z=list(z))
        return InstanceFile(cons.dz_rewards(m), D.support, D.weights,
                            contracts=(cons.dz_optimum(m, z),), meta=meta)
    if cid == "impossibility":
        inst = cons.impossibility(_need(p, "eps", cid), _need(p, "delta", cid), int(p.get("K", 1)))
        D = inst.D2
        meta.update(eps=str(inst.eps), delta=str(inst.delta), K=inst.K,
                    q=str(inst.q), eta=str(inst.eta), t_star=[str(v) for v in inst.t_star])
        return InstanceFile(inst.rewards, D.support, D.weights, contracts=(inst.t_star,), meta=meta)
    if cid == "grid-forcing":
        alphas = [to_rational(a) for a in p.get("alphas", ("1/4",))]
        m = len(alphas) + 1
        r = as_rewards(p.get("rewards", [0] + [1] * (m - 1)))
        D = grid_forcing_distribution(alphas, r, int(p.get("n", 2)))
        t, value = grid_forcing_optimum(alphas, r)
        meta.update(alphas=[str(a) for a in alphas], opt_value=str(value))
        return InstanceFile(r, D.support, D.weights, contracts=(t,), meta=meta)
    if cid == "bitmask-shatter":
        n, m = int(p.get("n", 4)), int(p.get("m", 2))
        inst = bitmask_shatter_instance(n, m)
        meta.update(n=n, m=m)
        return InstanceFile(inst.rewards, inst.types, thresholds=inst.thresholds,
                            contracts=tuple(inst.search_space), meta=meta)
    if cid == "random":
        rng = make_rng(int(p.get("seed", 0)))
        n, m, size = int(p.get("n", 3)), int(p.get("m", 2)), int(p.get("size", 4))
        D = cons.random_distribution(rng, size, n, m)
        r = cons.random_rewards(rng, m) if p.get("random_rewards") else as_rewards([0] + [1] * (m - 1))
        meta.update(n=n, m=m, size=size, seed=int(p.get("seed", 0)))
        return InstanceFile(r, D.support, D.weights, meta=meta)
    raise ValueError(f"unknown construction {cid!r}; choose from {', '.join(CONSTRUCTIONS)}")


def _need(p: dict, key: str, cid: str):
    if p.get(key) is None:
        raise ValueError(f"{cid} needs the parameter {key!r}")
    return p[key]


# -- sample complexity -------------------------------------------------------

def sample_size_ladder(n_max: int, dense_until: int = 64, ratio: float = 1.1) -> list[int]:
    """Every size up to ``dense_until``, then geometric steps up to ``n_max``."""
    sizes = list(range(1, min(dense_until, n_max) + 1))
    x = float(sizes[-1])
    while sizes[-1] < n_max:
        x *= ratio
        sizes.append(min(n_max, max(sizes[-1] + 1, math.ceil(x))))
    return sizes


@dataclass(frozen=True)
class _Trial:
    D: TypeDistribution
    r: Rewards
    learner: str
    eps: Fraction
    sizes: tuple[int, ...]
    seed: int
    stream: tuple[int, ...]


def _learner_eval(D: TypeDistribution, r: Rewards, learner: str, eps: Fraction):
    """Per-type profiles and an exact true-value function of a linear contract."""
    profiles = [critical_values(theta, r) for theta in D.support]

    def value(alpha: Fraction) -> Fraction:
        return sum((w * p.utility_at(alpha) for w, p in zip(D.weights, profiles)), Fraction(0))

    mode = "grid" if learner == "grid" else "critical"
    return profiles, value, mode


def _trial_successes(task: _Trial) -> list[bool]:
    """Whether ERM on the first N draws is eps-optimal, for each tested N.

    All sizes share one draw sequence (common random numbers).
    """
    profiles, value, mode = _learner_eval(task.D, task.r, task.learner, task.eps)
    opt = opt_linear(task.D, task.r)[1]
    draws = sample_indices(task.D, max(task.sizes), make_rng(task.seed, *task.stream))
    k = len(task.D.support)
    counts = np.zeros((len(draws) + 1, k), dtype=np.int64)
    counts[1:] = np.cumsum(np.eye(k, dtype=np.int64)[draws], axis=0)
    out = []
    for N in task.sizes:
        lc, _ = erm_linear_counts(profiles, counts[N].tolist(), mode, task.eps)
        out.append(value(lc.alpha) >= opt - task.eps)
    return out


def success_rates(
    D: TypeDistribution, r, eps, sizes: Sequence[int], trials: int, seed: int,
    learner: str = "critical", stream: tuple[int, ...] = (),
) -> list[Fraction]:
    """Fraction of trials whose ERM output is within ``eps`` of the optimum, per sample size."""
    r = as_rewards(r)
    eps = to_rational(eps)
    tasks = [_Trial(D, r, learner, eps, tuple(sizes), seed, (*stream, k)) for k in range(trials)]
    results = parallel_map(_trial_successes, tasks)
    return [Fraction(sum(res[i] for res in results), trials) for i in range(len(sizes))]


def n_star(sizes: Sequence[int], rates: Sequence[Fraction], delta) -> tuple[int | None, Fraction]:
    """Smallest tested size from which every larger tested size succeeds with rate >= 1 - delta."""
    target = 1 - to_rational(delta)
    found, rate = None, rates[-1]
    for N, x in zip(reversed(sizes), reversed(rates)):
        if x < target:
            break
        found, rate = N, x
    return found, rate


@dataclass(frozen=True)
class SampleComplexityRow:
    eps: Fraction
    N_star: int | None
    success_rate: Fraction
    seed_count: int


def run_sample_complexity(cfg: ExperimentConfig) -> list[SampleComplexityRow]:
    """Empirical N* for each eps; the distribution is rebuilt for each eps when it takes one."""
    rows = []
    for idx, eps in enumerate(cfg.eps):
        eps = to_rational(eps)
        D, r = distribution_of(cfg.construction, {**cfg.params, "eps": eps})
        sizes = list(cfg.sample_sizes) or sample_size_ladder(math.ceil(4 / eps**2))
        rates = success_rates(D, r, eps, sizes, cfg.trials, cfg.seed, cfg.learner, (idx,))
        N, rate = n_star(sizes, rates, cfg.delta)
        rows.append(SampleComplexityRow(eps, N, rate, cfg.trials))
    if cfg.out:
        write_csv(cfg.out, ["eps", "N_star", "success_rate", "seed_count"],
                  [[float(x.eps), "" if x.N_star is None else x.N_star, float(x.success_rate), x.seed_count]
                   for x in rows])
    return rows


def sample_complexity_slope(rows: Sequence[SampleComplexityRow]) -> float:
    """Log-log slope of N* against 1/eps; NaN if some N* is missing."""
    if any(x.N_star is None for x in rows):
        return math.nan
    return fit_loglog_slope([float(1 / x.eps) for x in rows], [float(x.N_star) for x in rows])


# -- representation error ----------------------------------------------------

LINEAR_REFERENCE_STEP = Fraction(1, 10**4)
BOX_REFERENCE_STEP = Fraction(1, 50)


@functools.lru_cache(maxsize=8)
def _reference_space(r: Rewards) -> LinearSpace:
    return LinearSpace(eps_grid(LINEAR_REFERENCE_STEP).points, r)


def linear_reference(D: TypeDistribution, r) -> tuple[Fraction, Fraction]:
    """Best value on the 1e-4 alpha grid, by batch best responses (no critical values)."""
    r = as_rewards(r)
    S = _reference_space(r)
    t, value = opt_over_set(D, S, r)
    return S.alpha_of(t), value


def bounded_grid_lower_bound(
    D: TypeDistribution, grid: BoundedGrid, r, reference: BoxGrid, seeds: int = 16
) -> tuple[Contract, Fraction]:
    """Exact value of a grid member near the best reference contracts.

    The member belongs to the grid, so its value never exceeds the grid optimum.
    """
    return witness_search(D, grid, r, top_contracts(D, reference, r, seeds))


@dataclass(frozen=True)
class RepErrorRow:
    cls: str
    eps: Fraction
    trial: int
    class_value: Fraction
    reference_value: Fraction

    @property
    def gap(self) -> Fraction:
        return self.reference_value - self.class_value


def _rep_error_trial(args) -> list[RepErrorRow]:
    cls, eps_values, m, n, size, seed, k = args
    rng = make_rng(seed, k)
    D = cons.random_distribution(rng, size, n, m)
    r = as_rewards([0] + [1] * (m - 1))
    rows = []
    if cls == "linear":
        _, ref = linear_reference(D, r)
        for eps in eps_values:
            rows.append(RepErrorRow(cls, eps, k, opt_linear_grid(D, r, eps)[1], ref))
    elif cls == "bounded":
        box = BoxGrid(m, BOX_REFERENCE_STEP)
        ref = opt_over_set(D, box, r)[1]
        for eps in eps_values:
            grid = bounded_grid(r, eps, lazy=True)
            rows.append(RepErrorRow(cls, eps, k, bounded_grid_lower_bound(D, grid, r, box)[1], ref))
    else:
        raise ValueError(f"unknown class {cls!r}")
    return rows


def run_representation_error(
    cfg: ExperimentConfig, cls: str = "linear", m: int = 2, n: int = 4, size: int = 4
) -> list[RepErrorRow]:
    """Class optimum against a fine reference grid on random distributions.

    ``cls="linear"`` compares the eps-grid of linear contracts with the 1e-4
    alpha grid.  ``cls="bounded"`` compares a certified lower bound on the
    bounded-grid optimum with the 0.02 box grid.  Columns: class, eps, trial,
    class_value, reference_value, gap.
    """
    eps_values = tuple(to_rational(e) for e in cfg.eps)
    tasks = [(cls, eps_values, m, n, size, cfg.seed, k) for k in range(cfg.trials)]
    rows = [row for chunk in parallel_map(_rep_error_trial, tasks) for row in chunk]
    if cfg.out:
        write_csv(cfg.out, ["class", "eps", "trial", "class_value", "reference_value", "gap"],
                  [[x.cls, float(x.eps), x.trial, float(x.class_value), float(x.reference_value), float(x.gap)]
                   for x in rows])
    return rows


# -- regret ------------------------------------------------------------------

def default_checkpoints(T: int, start: int = 256) -> list[int]:
    out, x = [], start
    while x <= T:
        out.append(x)
        x *= 2
    return out or [T]


def _regret_run(args) -> OnlineRun:
    D, r, learner, T, seed, k = args
    return ftl_run(D, r, learner, T, seed, stream=(k,))


def run_regret(
    cfg: ExperimentConfig, checkpoints: Sequence[int] | None = None, dat: str | None = None
) -> RegretSummary:
    """FTL over ``cfg.trials`` seeds; CSV columns T, mean_regret, runs."""
    D, r = distribution_of(cfg.construction, cfg.params)
    if cfg.learner == "critical":
        learner = "critical"
    elif cfg.learner == "grid":
        learner = BoxGrid(r.m, to_rational(cfg.params.get("step", "1/20")))
    else:
        raise ValueError(f"unknown learner {cfg.learner!r}")
    runs = parallel_map(_regret_run, [(D, r, learner, cfg.T, cfg.seed, k) for k in range(cfg.trials)])
    summary = regret_summary(runs, list(checkpoints or default_checkpoints(cfg.T)))
    if cfg.out:
        write_csv(cfg.out, ["T", "mean_regret", "runs"],
                  [[T, float(v), len(runs)] for T, v in summary.table])
    if dat:
        lines = ["# T mean_regret"] + [f"{T} {float(v):.12g}" for T, v in summary.table]
        Path(dat).write_text("\n".join(lines) + "\n")
    return summary


# -- unbounded impossibility -------------------------------------------------

def _cheapest_implementation(theta: AgentType, i: int, r) -> Contract | None:
    """Cheapest contract under which a two-action agent picks action ``i``.

    All payment goes to the outcome with the best likelihood ratio against the
    other action; None if action ``i`` cannot be made the best response.
    """
    if theta.n != 2 or theta.c[i] == INF:
        raise ValueError("needs a two-action type and an available action")
    other = 1 - i
    if theta.c[other] == INF:
        return Contract.zero(theta.m)
    gap = theta.c[i] - theta.c[other]
    if gap <= 0:
        return Contract.zero(theta.m)
    best = None
    for j, (a, b) in enumerate(zip(theta.f[i], theta.f[other])):
        if a > b and (best is None or (a - b) / a > best[0]):
            best = ((a - b) / a, j, gap / (a - b))
    if best is None:
        return None
    pay = [Fraction(0)] * theta.m
    pay[best[1]] = best[2]
    return Contract(pay)


def optimal_unbounded_two_action(theta: AgentType, r) -> tuple[Contract, Fraction]:
    """Exact optimal unbounded contract for a two-action type."""
    r = as_rewards(r)
    best = None
    for i in range(2):
        if theta.c[i] == INF:
            continue
        t = _cheapest_implementation(theta, i, r)
        if t is None:
            continue
        value = principal_action_utility(theta, t, i, r)
        if best is None or value > best[1]:
            best = (t, value)
    return best


@dataclass(frozen=True)
class ImpossibilityReport:
    eps: Fraction
    delta: Fraction
    K: int
    q: Fraction
    eta: Fraction
    t_star: Contract
    value_D1: Fraction
    value_D2: Fraction
    clamped: Contract
    clamped_value_D2: Fraction
    erm_contract: Contract
    loose_bound: Fraction
    tight_bound: Fraction

    @property
    def erm_meets_loose_bound(self) -> bool:
        return self.erm_contract[0] >= self.loose_bound

    @property
    def erm_meets_tight_bound(self) -> bool:
        return self.erm_contract[0] >= self.tight_bound

    @property
    def t_star_meets_loose_bound(self) -> bool:
        return self.t_star[0] >= self.loose_bound

    def lines(self) -> list[str]:
        def s(x):
            return f"{x} (~{float(x):.6g})"
        return [
            f"eps = {self.eps}, delta = {self.delta}, K = {self.K}",
            f"q = delta^(1/K) = {s(self.q)}",
            f"eta = (1/4 - eps)(1 - q) = {s(self.eta)}",
            f"t_star = ({', '.join(str(v) for v in self.t_star)})",
            f"utility of t_star on D1 = {s(self.value_D1)}",
            f"utility of t_star on D2 = {s(self.value_D2)}",
            f"clamped to [0,1]: ({', '.join(str(v) for v in self.clamped)}), utility on D2 = {s(self.clamped_value_D2)}",
            f"exact optimum for the D1 type: ({', '.join(str(v) for v in self.erm_contract)})",
            f"t0 >= 2/(1 - q) = {s(self.loose_bound)}: t_star {self.t_star_meets_loose_bound}, "
            f"optimum {self.erm_meets_loose_bound}",
            f"t0 >= (1/4 - eps)/eta = {s(self.tight_bound)}: optimum {self.erm_meets_tight_bound}",
        ]


def run_impossibility_demo(eps, delta, K: int) -> ImpossibilityReport:
    inst = cons.impossibility(eps, delta, K)
    r = inst.rewards
    t = inst.t_star
    clamped = Contract(min(v, 1) for v in t)
    erm, _ = optimal_unbounded_two_action(inst.good, r)
    return ImpossibilityReport(
        inst.eps, inst.delta, inst.K, inst.q, inst.eta, t,
        expected_principal_utility(inst.D1, t, r),
        expected_principal_utility(inst.D2, t, r),
        clamped,
        expected_principal_utility(inst.D2, clamped, r),
        erm,
        2 / (1 - inst.q),
        (Fraction(1, 4) - inst.eps) / inst.eta,
    )


# -- output ------------------------------------------------------------------

def write_csv(path, header: Sequence[str], rows: Sequence[Sequence]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)
