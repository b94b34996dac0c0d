from __future__ import annotations

import itertools
from collections import Counter
from fractions import Fraction as F

import pytest
from hypothesis import given
from hypothesis import strategies as st

from contractlab import (
    BoxGrid,
    Contract,
    ExplicitSpace,
    Menu,
    ResourceCapError,
    TypeDistribution,
    agent_utility,
    erm_bounded,
    erm_menu,
    menu_choice,
    menu_utility,
    opt_menu,
    principal_utility,
)
from contractlab.constructions import d1_linear, theta1, theta2
from contractlab.menus import menu_empirical_value
from contractlab.model import INF
from contractlab.rng import make_rng, sample_indices

from oracles import naive_menu_value
from strategies import contracts, typed_with_rewards

R = (0, 1)


def test_menu_examples():
    M = Menu(((0, 0), (0, F(1, 2))))
    assert menu_choice(theta2(), M, R) == (1, 1)
    assert menu_utility(theta2(), M, R) == F(1, 4)
    assert menu_utility(theta2(), Menu(((0, F(2, 5)), (0, F(9, 20)))), R) == 0
    assert menu_choice(theta1(), Menu(((0, 0),)), R) == (0, 0)


def test_menu_is_canonical():
    a = Menu(((0, F(1, 2)), (0, 0)))
    b = Menu(((0, 0), (0, F(1, 2))))
    assert a == b and a.contracts[0] == Contract((0, 0))


def test_menu_validation():
    with pytest.raises(ValueError):
        Menu(())
    with pytest.raises(ValueError):
        Menu(((0, 0), (0, 0, 0)))


@given(typed_with_rewards(), st.data())
def test_duplicate_menu_matches_single_contract(tr, data):
    theta, r = tr
    t = data.draw(contracts(theta.m))
    K = data.draw(st.integers(1, 3))
    assert menu_utility(theta, Menu.duplicate(t, K), r) == principal_utility(theta, t, r)


@given(typed_with_rewards(), st.data())
def test_menu_choice_is_agent_optimal_and_matches_oracle(tr, data):
    theta, r = tr
    ts = data.draw(st.lists(contracts(theta.m), min_size=1, max_size=3))
    M = Menu(ts)
    k, i = menu_choice(theta, M, r)
    best = agent_utility(theta, M.contracts[k], i)
    for t in M.contracts:
        for a in range(theta.n):
            if theta.c[a] != INF:
                assert agent_utility(theta, t, a) <= best
    f = [list(row) for row in theta.f]
    assert menu_utility(theta, M, r) == naive_menu_value(f, list(theta.c), [list(t) for t in ts], list(r.values))


@given(typed_with_rewards(), st.data())
def test_menu_utility_is_permutation_invariant(tr, data):
    theta, r = tr
    ts = data.draw(st.lists(contracts(theta.m), min_size=2, max_size=3))
    perm = data.draw(st.permutations(ts))
    assert menu_utility(theta, Menu(ts), r) == menu_utility(theta, Menu(perm), r)


def test_k1_matches_erm_bounded():
    samples = [theta1(), theta2(), theta2()]
    S = BoxGrid(2, F(1, 4))
    assert erm_menu(samples, R, 1, S).contracts[0] == erm_bounded(samples, R, S)


def test_k2_is_at_least_every_duplicated_single_contract():
    samples = [theta1(), theta2()]
    S = BoxGrid(2, F(1, 2))
    M = erm_menu(samples, R, 2, S)
    v = menu_empirical_value(samples, M, R)
    for t in S:
        assert v >= menu_empirical_value(samples, Menu.duplicate(t, 2), R)


def test_k2_on_sampled_d1_matches_reenumeration():
    D = d1_linear(F(1, 20))
    idx = sample_indices(D, 200, make_rng(11)).tolist()
    samples = [D.support[k] for k in idx]
    S = BoxGrid(2, F(1, 4))
    M = erm_menu(samples, R, 2, S)
    got = menu_empirical_value(samples, M, R)

    counts = Counter(idx)
    grid = sorted([F(a, 4), F(b, 4)] for a in range(5) for b in range(5))
    best, best_menu = None, None
    for pair in itertools.product(grid, repeat=2):
        if pair[0] > pair[1]:
            continue
        v = sum(
            c * naive_menu_value([list(x) for x in D.support[k].f], list(D.support[k].c), list(pair), [0, 1])
            for k, c in counts.items()
        ) / 200
        if best is None or v > best:
            best, best_menu = v, pair
    assert got == best
    assert [list(t) for t in M.contracts] == list(best_menu)


def test_opt_menu_rho_stops_early():
    D = TypeDistribution.point_mass(theta2())
    S = BoxGrid(2, F(1, 4))
    # welfare bound is 1/4, so rho = 1/4 accepts the very first menu
    M, v = opt_menu(D, R, 2, S, rho=F(1, 4))
    assert M == Menu.duplicate((0, 0), 2) and v == 0
    M, v = opt_menu(D, R, 2, S, rho=F(1, 8))
    assert v >= F(1, 8)
    assert opt_menu(D, R, 2, S)[1] == F(1, 4)


def test_menu_cap():
    with pytest.raises(ResourceCapError):
        opt_menu(TypeDistribution.point_mass(theta2()), R, 3, BoxGrid(2, F(1, 10)), cap=1000)
    with pytest.raises(ValueError):
        opt_menu(TypeDistribution.point_mass(theta2()), R, 0, ExplicitSpace([(0, 0)]))
