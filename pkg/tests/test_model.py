from __future__ import annotations

import math
from fractions import Fraction as F

import pytest
from hypothesis import given
from hypothesis import strategies as st

from contractlab import (
    AgentType,
    Contract,
    LinearContract,
    Rewards,
    TypeDistribution,
    agent_utility,
    best_response,
    expected_principal_utility,
    principal_action_utility,
    principal_reward,
    principal_utility,
    to_binary,
)
from contractlab.constructions import d1_linear, theta1, theta2
from contractlab.model import binary_rewards
from oracles import naive_choice, naive_principal
from strategies import contracts, typed_with_rewards

R = (0, 1)
T2, T1 = theta2(), theta1()


# -- worked examples ----------------------------------------------------------

def test_agent_utility_zero_contract():
    assert agent_utility(T2, Contract.zero(2), 0) == 0


def test_agent_utility_tie_at_half():
    assert agent_utility(T2, (0, F(1, 2)), 1) == 0


def test_agent_utility_below_half():
    # frozen from the naive evaluator: (1/2)(2/5) - 1/4
    assert agent_utility(T2, (0, F(2, 5)), 1) == F(-1, 20)
    assert F(1, 2) * F(2, 5) - F(1, 4) == F(-1, 20)


def test_agent_utility_unavailable_action():
    theta = AgentType(((1, 0), (0, 1)), (0, "inf"))
    assert agent_utility(theta, (0, 1), 1) == -math.inf


def test_principal_action_utility_examples():
    assert principal_action_utility(T2, (0, F(1, 2)), 1, R) == F(1, 4)
    assert principal_action_utility(T1, (0, 0), 0, R) == F(1, 2)
    for i in range(2):
        assert principal_action_utility(T2, (0, 1), i, R) == 0


def test_best_response_examples():
    assert best_response(T2, LinearContract(F(2, 5)), R) == 0
    assert best_response(T2, (0, F(1, 2)), R) == 1  # agent tie broken toward the principal
    assert best_response(AgentType(((F(1, 3), F(2, 3)),), (0,)), (0, 1), R) == 0


def test_principal_utility_examples():
    assert principal_utility(T2, (0, F(1, 2)), R) == F(1, 4)
    assert principal_utility(T2, (0, F(2, 5)), R) == 0
    assert principal_utility(T1, (0, 0), R) == F(1, 2)


def test_principal_reward_examples():
    for a in (0, F(1, 3), F(1, 2), 1):
        assert principal_reward(T1, LinearContract(a), R) == F(1, 2)
    assert principal_reward(T2, LinearContract(F(3, 5)), R) == F(1, 2)
    assert principal_reward(T2, LinearContract(F(1, 10)), R) == 0


def test_expected_principal_utility_examples():
    D1 = d1_linear(F(1, 20))
    assert expected_principal_utility(D1, LinearContract(F(1, 2)), R) == F(1, 4)
    assert expected_principal_utility(TypeDistribution.point_mass(T2), LinearContract(0), R) == 0
    # 3/10 mass on theta1 earning 1/2, theta2 earning 0
    assert expected_principal_utility(D1, LinearContract(0), R) == F(3, 20)


def test_to_binary_examples():
    assert to_binary(T2, R) == T2
    theta = AgentType(((F(1, 5), F(1, 2), F(3, 10)), (1, 0, 0)), (0, F(1, 10)))
    b = to_binary(theta, (0, 1, 1))
    assert b.f[0] == (F(1, 5), F(4, 5))
    assert b.f[1] == (1, 0)
    assert b.c == theta.c


# -- validation ---------------------------------------------------------------

@pytest.mark.parametrize(
    "f, c",
    [
        (((1, 0), (F(1, 2), F(1, 3))), (0, 0)),  # row sum
        (((1, 0), (F(3, 2), F(-1, 2))), (0, 0)),  # negative entry
        (((1, 0),), (F(1, 4),)),  # c0 != 0
        (((1, 0), (0, 1)), (0, F(-1, 4))),  # negative cost
        (((1, 0), (0, 1)), (0,)),  # cost count
        ((), ()),  # no actions
        (((1, 0), (1,)), (0, 0)),  # ragged
    ],
)
def test_invalid_types(f, c):
    with pytest.raises(ValueError):
        AgentType(f, c)


def test_invalid_rewards():
    for vals in [(0,), (1, 1), (0, 0), (0, -1, 1)]:
        with pytest.raises(ValueError):
            Rewards(vals)


def test_invalid_contracts_and_indices():
    with pytest.raises(ValueError):
        Contract((0, -1))
    with pytest.raises(ValueError):
        LinearContract(F(3, 2))
    with pytest.raises((ValueError, IndexError)):
        agent_utility(T2, (0, 0), 2)
    with pytest.raises(ValueError):
        agent_utility(T2, (0, 0, 0), 0)
    with pytest.raises(ValueError):
        principal_utility(T2, (0, 0), (0, 1, 1))


def test_invalid_distributions():
    with pytest.raises(ValueError):
        TypeDistribution((T1, T2), (F(1, 2), F(1, 3)))
    with pytest.raises(ValueError):
        TypeDistribution((), ())
    with pytest.raises(ValueError):
        TypeDistribution((T1, AgentType(((1, 0, 0),), (0,))), (F(1, 2), F(1, 2)))


# -- properties -----------------------------------------------------------------

@given(typed_with_rewards(), st.data())
def test_best_response_matches_oracle(tr, data):
    theta, r = tr
    t = data.draw(contracts(theta.m))
    i = best_response(theta, t, r)
    assert i == naive_choice(theta.f, theta.c, t, r.values)
    assert principal_utility(theta, t, r) == naive_principal(theta.f, theta.c, t, r.values)


@given(typed_with_rewards(), st.data())
def test_principal_utility_is_action_utility_at_best_response(tr, data):
    theta, r = tr
    t = data.draw(contracts(theta.m))
    i = best_response(theta, t, r)
    assert principal_utility(theta, t, r) == principal_action_utility(theta, t, i, r)
    top = agent_utility(theta, t, i)
    assert all(agent_utility(theta, t, k) <= top for k in range(theta.n))


@given(typed_with_rewards(), st.data())
def test_bounded_utilities(tr, data):
    theta, r = tr
    t = data.draw(contracts(theta.m))
    assert abs(principal_utility(theta, t, r)) <= 1


@given(typed_with_rewards(), st.integers(0, 20))
def test_binary_reduction_preserves_linear_utility(tr, k):
    theta, r = tr
    alpha = LinearContract(F(k, 20))
    b = to_binary(theta, r)
    assert principal_utility(theta, alpha, r) == principal_utility(b, alpha, binary_rewards(r))


@given(typed_with_rewards(), st.data())
def test_deterministic(tr, data):
    theta, r = tr
    t = data.draw(contracts(theta.m))
    clone = AgentType(theta.f, theta.c)
    assert best_response(theta, t, r) == best_response(clone, t, r)
    assert principal_utility(theta, t, r) == principal_utility(clone, t, r)
