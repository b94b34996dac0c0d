from __future__ import annotations

import math
from fractions import Fraction as F

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from contractlab import (
    BoxGrid,
    LinearContract,
    TypeDistribution,
    erm_bounded,
    erm_linear,
    ftl_run,
    principal_utility,
    regret_summary,
)
from contractlab.constructions import d1_linear, random_distribution, random_rewards, theta1, theta2
from contractlab.online import fit_loglog_slope
from contractlab.rng import make_rng

R = (0, 1)


def test_point_mass_theta2_regret_is_one_quarter():
    run = ftl_run(TypeDistribution.point_mass(theta2()), R, T=10)
    assert run.cumulative_regret == (F(1, 4),) * 10
    assert run.per_round[0][0] == LinearContract(0)
    assert all(t == LinearContract(F(1, 2)) for t, _, _ in run.per_round[1:])


def test_point_mass_theta1_regret_is_zero():
    run = ftl_run(TypeDistribution.point_mass(theta1()), R, T=25, seed=3)
    assert set(run.cumulative_regret) == {0}


@pytest.mark.parametrize("seed", range(8))
def test_single_round_on_d1(seed):
    D = d1_linear(F(1, 10))
    run = ftl_run(D, R, T=1, seed=seed)
    t, k, u = run.per_round[0]
    assert run.opt_value == F(1, 4) and t == LinearContract(0)
    # the zero contract earns nothing on theta2 and 1/2 on theta1
    assert u == (0 if D.support[k] == theta2() else F(1, 2))
    assert run.cumulative_regret == (F(1, 4) - u,)


def test_runs_are_reproducible():
    D = d1_linear(F(1, 10))
    assert ftl_run(D, R, T=50, seed=4) == ftl_run(D, R, T=50, seed=4)
    assert ftl_run(D, R, T=50, seed=4) != ftl_run(D, R, T=50, seed=5)


def _random_instance(seed):
    rng = make_rng(seed)
    m = int(rng.integers(2, 4))
    return random_distribution(rng, 3, 3, m), random_rewards(rng, m)


@settings(max_examples=25)
@given(st.integers(0, 10**6))
def test_ftl_plays_prefix_erm_and_books_regret(seed):
    D, r = _random_instance(seed)
    run = ftl_run(D, r, T=12, seed=seed)
    total = F(0)
    for i, (t, k, u) in enumerate(run.per_round):
        prefix = [D.support[j] for _, j, _ in run.per_round[:i]]
        expected = erm_linear(prefix, r)[0] if prefix else LinearContract(0)
        assert t == expected
        assert u == principal_utility(D.support[k], t, r)
        total += u
        assert run.cumulative_regret[i] == (i + 1) * run.opt_value - total


@settings(max_examples=10)
@given(st.integers(0, 10**6))
def test_grid_ftl_plays_prefix_erm(seed):
    D, r = _random_instance(seed)
    S = BoxGrid(r.m, F(1, 4))
    run = ftl_run(D, r, learner=S, T=8, seed=seed)
    for i, (t, _, _) in enumerate(run.per_round[1:], start=1):
        prefix = [D.support[j] for _, j, _ in run.per_round[:i]]
        assert t == erm_bounded(prefix, r, S)


def test_point_mass_with_exact_optimum_in_class_keeps_round_one_gap():
    D = TypeDistribution.point_mass(theta2())
    run = ftl_run(D, R, learner=BoxGrid(2, F(1, 4)), T=30)
    assert run.opt_value == F(1, 4)
    assert max(run.cumulative_regret) <= run.cumulative_regret[0] == F(1, 4)


def test_regret_summary():
    runs = [ftl_run(TypeDistribution.point_mass(theta2()), R, T=64, seed=s) for s in range(3)]
    summary = regret_summary(runs, [8, 16, 32, 64])
    assert summary.table == tuple((T, F(1, 4)) for T in (8, 16, 32, 64))
    assert summary.slope == 0.0
    one = regret_summary(runs[:1], [5])
    assert one.table == ((5, F(1, 4)),) and math.isnan(one.slope)


def test_regret_summary_errors():
    with pytest.raises(ValueError):
        regret_summary([], [1])
    run = ftl_run(TypeDistribution.point_mass(theta2()), R, T=4)
    with pytest.raises(ValueError):
        regret_summary([run], [5])
    with pytest.raises(ValueError):
        ftl_run(TypeDistribution.point_mass(theta2()), R, T=0)
    with pytest.raises(ValueError):
        ftl_run(TypeDistribution.point_mass(theta2()), R, learner="nope")


def test_fit_loglog_slope():
    xs = [1, 2, 4, 8]
    assert fit_loglog_slope(xs, [x**0.5 for x in xs]) == pytest.approx(0.5)
    assert math.isnan(fit_loglog_slope(xs, [1, 0, 1, 1]))
