from fractions import Fraction as Fr

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from riskmech.errors import DomainError
from riskmech.lottery import (BinaryLottery, Menu, buyer_choice, choice_indices, general_lottery,
                              menu, pick, utility, utility_matrix)
from riskmech.weighting import power, w_eps

EXAMPLE = Menu((BinaryLottery(1, 0.5), BinaryLottery(0.5, 0.375)))


def test_binary_utility_both_sides():
    y = power(2)
    lot = BinaryLottery(Fr(1, 2), Fr(3, 8))
    assert utility(y, Fr(1), lot) == Fr(1, 4) * Fr(5, 8)
    # below the price: loss weighted by 1 - y(1 - x)
    assert utility(y, Fr(1, 8), lot) == (Fr(1, 8) - Fr(3, 8)) * (1 - Fr(1, 4))


@given(v=st.floats(0, 3), x=st.floats(0, 1), p=st.floats(0, 3), k=st.integers(1, 4))
@settings(max_examples=200, deadline=None)
def test_vectorized_utility_matches_scalar(v, x, p, k):
    lot = BinaryLottery(x, p)
    assert utility_matrix([lot], power(k), [v])[0, 0] == pytest.approx(
        float(utility(power(k), v, lot)), abs=1e-12)


@given(v=st.floats(0, 3))
@settings(max_examples=100, deadline=None)
def test_general_vectorized_matches_exact(v):
    lot = general_lottery([(0, 0, 0.5), (1, 1, 0.25), (1, 2, 0.25)])
    y = w_eps(0.4)
    assert utility_matrix([lot], y, [v])[0, 0] == pytest.approx(float(utility(y, v, lot)), abs=1e-12)


def test_normal_form_enforced():
    with pytest.raises(DomainError):
        general_lottery([(0, 1, 0.5), (1, 1, 0.5)])
    lot = general_lottery([(0, 1, 0.5), (1, 1, 0.5)], canonicalize=True)
    assert lot.expected_payment == 1
    assert lot.branches == ((0, 0, 0.5), (1, 2, 0.5))


def test_menu_rejects_duplicates_and_helper_dedups():
    with pytest.raises(DomainError):
        Menu((BinaryLottery(1, 1), BinaryLottery(1, 1)))
    assert len(menu(BinaryLottery(1, 1), BinaryLottery(1, 1))) == 1


def test_ties_go_to_higher_payment():
    m = Menu((BinaryLottery(1, 0.5), BinaryLottery(0.5, 0.375)))
    c = buyer_choice(power(2), 13 / 24, m)
    assert c.index == 0
    util = np.array([[0.0, 0.0]])
    assert pick(util, np.array([0.2, 0.1]))[0] == 0
    assert pick(np.array([[-1.0]]), np.array([0.5]))[0] == -1


def test_example_choices():
    y = power(2)
    assert buyer_choice(y, 0.2, EXAMPLE).index == -1
    assert buyer_choice(y, 0.45, EXAMPLE).index == 1
    assert buyer_choice(y, 0.8, EXAMPLE).index == 0
    idx = choice_indices(EXAMPLE, y, [0.2, 0.45, 0.8])
    assert idx.tolist() == [-1, 1, 0]


def test_json_round_trip():
    m = Menu((BinaryLottery(0.5, 1.0), general_lottery([(0, 0, 0.5), (1, 1.0, 0.5)])))
    assert Menu.from_json(m.to_json()) == m
