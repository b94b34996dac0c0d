from __future__ import annotations

from fractions import Fraction as F

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from contractlab import (
    AgentType,
    LinearContract,
    TypeDistribution,
    critical_values,
    eps_grid,
    erm_linear,
    opt_linear,
    opt_linear_grid,
    principal_reward,
    reward_steps,
    to_binary,
)
from contractlab.constructions import d1_linear, d2_linear, random_type, theta1, theta2
from contractlab.model import binary_rewards
from contractlab.rng import make_rng
from oracles import linear_t, naive_critical, naive_principal
from strategies import agent_types, typed_with_rewards

R = (0, 1)
T1, T2 = theta1(), theta2()
SINGLE = AgentType(((F(1, 3), F(2, 3)),), (0,))


def test_theta2_critical_value():
    prof = critical_values(T2, R)
    assert prof.breakpoints == (F(1, 2),)
    assert prof.reward_levels == (0, F(1, 2))


def test_single_action_has_no_critical_values():
    assert critical_values(SINGLE, R).breakpoints == ()


@pytest.mark.parametrize("seed", range(20))
def test_random_five_action_types_match_oracle(seed):
    rng = make_rng(seed)
    theta = random_type(rng, 5, 3, den=30, cost_den=40)
    r = (0, F(1, 2), 1)
    assert list(critical_values(theta, r).breakpoints) == naive_critical(theta.f, theta.c, r)


def test_random_type_matches_fine_scan():
    # a 1e-5 scan brackets every reward change; refine each bracket exactly
    theta = random_type(make_rng(7), 5, 2, den=30, cost_den=40)
    prof = critical_values(theta, R)
    f = np.array([[float(x) for x in row] for row in theta.f])
    c = np.array([float(x) for x in theta.c])
    alphas = np.linspace(0, 1, 100001)
    util = alphas[:, None] * f[None, :, 1] - c[None, :]
    reward = f[util.argmax(axis=1), 1]
    jumps = np.flatnonzero(np.diff(reward) != 0)
    brackets = [(alphas[k], alphas[k + 1]) for k in jumps]
    assert len(brackets) == len(prof.breakpoints)
    for (lo, hi), b in zip(brackets, prof.breakpoints):
        assert lo - 1e-9 <= float(b) <= hi + 1e-9


@pytest.mark.parametrize(
    "eps, points",
    [
        (F(2, 5), (0, F(2, 5), F(4, 5), 1)),
        (F(1, 2), (0, F(1, 2), 1)),
        (F(1), (0, 1)),
    ],
)
def test_eps_grid_examples(eps, points):
    assert eps_grid(eps).points == points


@given(st.integers(1, 60), st.integers(1, 60))
def test_eps_grid_size(a, b):
    eps = F(min(a, b), max(a, b))
    pts = eps_grid(eps).points
    expect = int(1 / eps) + 1 + (0 if (1 / eps).denominator == 1 else 1)
    assert len(pts) == expect
    assert list(pts) == sorted(set(pts))


def test_eps_grid_rejects_bad_eps():
    for eps in (0, F(3, 2), -1):
        with pytest.raises(ValueError):
            eps_grid(eps)


def test_erm_examples():
    assert erm_linear([T2], R) == (LinearContract(F(1, 2)), F(1, 4))
    assert erm_linear([T1, T2], R) == (LinearContract(0), F(1, 4))
    assert erm_linear([T2], R, mode="grid", eps=F(2, 5)) == (LinearContract(F(4, 5)), F(1, 10))
    with pytest.raises(ValueError):
        erm_linear([], R)


def test_reward_steps_examples():
    s = reward_steps(T2, R)
    assert [(x.lo, x.hi, x.closed, x.reward, x.action) for x in s] == [
        (0, F(1, 2), False, 0, 0),
        (F(1, 2), 1, True, F(1, 2), 1),
    ]
    s = reward_steps(T1, R)
    assert [(x.lo, x.hi, x.reward, x.action) for x in s] == [(0, 1, F(1, 2), 0)]
    assert len(reward_steps(SINGLE, R)) == 1


def test_opt_linear_examples():
    assert opt_linear(d1_linear(F(1, 20)), R) == (LinearContract(F(1, 2)), F(1, 4))
    assert opt_linear(d2_linear(F(1, 20)), R) == (LinearContract(0), F(1, 4) + 2 * F(1, 20))
    assert opt_linear(TypeDistribution.point_mass(T1), R) == (LinearContract(0), F(1, 2))


# -- properties -----------------------------------------------------------------

@given(typed_with_rewards(max_n=8, max_m=5))
def test_critical_value_count(tr):
    theta, r = tr
    prof = critical_values(theta, r)
    assert len(prof.breakpoints) <= theta.n - 1
    assert all(a < b for a, b in zip(prof.breakpoints, prof.breakpoints[1:]))
    assert all(a < b for a, b in zip(prof.reward_levels, prof.reward_levels[1:]))
    assert all(0 < b <= 1 for b in prof.breakpoints)


@given(typed_with_rewards(), st.lists(st.integers(0, 40), min_size=1, max_size=8))
def test_reward_is_constant_on_steps(tr, ks):
    theta, r = tr
    steps = reward_steps(theta, r)
    assert steps[0].lo == 0 and steps[-1].hi == 1 and steps[-1].closed
    assert all(a.hi == b.lo for a, b in zip(steps, steps[1:]))
    for k in ks:
        alpha = F(k, 40)
        (step,) = [s for s in steps if alpha in s]
        assert principal_reward(theta, LinearContract(alpha), r) == step.reward


@given(typed_with_rewards())
def test_critical_values_match_oracle(tr):
    theta, r = tr
    assert list(critical_values(theta, r).breakpoints) == naive_critical(theta.f, theta.c, r.values)


@given(typed_with_rewards())
def test_critical_values_survive_binary_reduction(tr):
    theta, r = tr
    assert critical_values(theta, r).breakpoints == critical_values(to_binary(theta, r), binary_rewards(r)).breakpoints


@given(st.lists(agent_types(m=2, max_n=4), min_size=1, max_size=5))
def test_erm_is_in_candidates_and_beats_a_grid(samples):
    lc, value = erm_linear(samples, R)
    cands = {F(0)}
    for theta in samples:
        cands.update(critical_values(theta, R).breakpoints)
    assert lc.alpha in cands
    for k in range(201):
        a = F(k, 200)
        emp = sum(naive_principal(th.f, th.c, linear_t(a, R), R) for th in samples) / len(samples)
        assert value >= emp


@given(st.lists(agent_types(m=2, max_n=4), min_size=1, max_size=4), st.sampled_from([F(1, 10), F(1, 4), F(1, 3)]))
def test_grid_representation_error(types, eps):
    D = TypeDistribution.uniform(types)
    assert opt_linear_grid(D, R, eps)[1] >= opt_linear(D, R)[1] - eps
