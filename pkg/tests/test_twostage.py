import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from helpers import random_posted_menu, random_setting
from riskmech.errors import DomainError, UnsupportedMechanismError
from riskmech.lowerbound import u_eps
from riskmech.twostage import (CompositeOption, FunctionalMenu, PostedPriceMenu, TwoStageSetting,
                               best_two_stage, buyer_choice_two_stage, choice_rows,
                               composite_option_utility, half_approx_menu, myerson_menu, prune,
                               revenue_two_stage, second_stage_utility, upper_bound)
from riskmech.valuedist import discrete, equal_revenue_bounded, uniform
from riskmech.weighting import power, w_eps

UNIFORM_SQUARE = TwoStageSetting(uniform(0, 1), uniform(0, 1), power(2))
EXAMPLE2 = PostedPriceMenu.from_pairs([(0, 1), (1 / 3, 0), (1 / 6, 0.5)])


def test_example2_second_stage_values():
    S = UNIFORM_SQUARE
    assert S.U(1.0) == 0.0
    assert S.U(0.0) == pytest.approx(1 / 3, abs=1e-12)
    assert S.U(0.5) == pytest.approx(1 / 24, abs=1e-12)
    assert S.U(math.inf) == 0.0
    with pytest.raises(DomainError):
        S.U(-1)


def test_example2_choices_and_revenue():
    S = UNIFORM_SQUARE
    assert buyer_choice_two_stage(0.2, EXAMPLE2, S).p == 0.0
    assert buyer_choice_two_stage(0.5, EXAMPLE2, S).p == pytest.approx(1 / 3)
    assert len(prune(EXAMPLE2, S)) == 2
    rev = revenue_two_stage(EXAMPLE2, S)
    assert rev.stage1 == pytest.approx(2 / 9, abs=1e-12)
    assert rev.stage2 == 0.0


def test_bounds_uniform_square():
    S = UNIFORM_SQUARE
    assert upper_bound(S) == pytest.approx(0.5 + 5 / 18, abs=1e-9)
    best = best_two_stage(S)
    assert best.revenue >= upper_bound(S) / 2 - 1e-9
    half = revenue_two_stage(half_approx_menu(S), S)
    assert half.stage1 == pytest.approx(S.F1.expected_min(1 / 3), abs=1e-9)


def test_myerson_menu_earns_both_stages():
    S = UNIFORM_SQUARE
    assert revenue_two_stage(myerson_menu(S), S).total == pytest.approx(0.5, abs=1e-9)


def test_equal_revenue_w_eps_uses_closed_form():
    n = 4.0
    S = TwoStageSetting(uniform(0, 1), equal_revenue_bounded(math.exp(n)), w_eps(0.1))
    for t in (0.0, 0.5, 3.0, 20.0):
        assert second_stage_utility(t, S) == pytest.approx(float(S.tail(t)), abs=1e-9)
        assert second_stage_utility(t, S) == u_eps(t, 0.1, n)


@given(seed=st.integers(0, 10_000))
@settings(max_examples=25, deadline=None)
def test_random_menus_below_upper_bound(seed):
    rng = np.random.default_rng(seed)
    S = random_setting(rng)
    m = random_posted_menu(rng, S)
    assert revenue_two_stage(m, S).total <= upper_bound(S) + 1e-6


@given(seed=st.integers(0, 10_000))
@settings(max_examples=10, deadline=None)
def test_interval_revenue_matches_pointwise_choices(seed):
    rng = np.random.default_rng(seed)
    S = TwoStageSetting(uniform(0, 1), uniform(0, 1), power(int(rng.integers(1, 4))))
    m = random_posted_menu(rng, S)
    grid = (np.arange(20000) + 0.5) / 20000
    rows = choice_rows(m, S, grid)
    stage1 = np.mean([r[3] for r in rows])
    stage2 = np.mean([r[4] for r in rows])
    rev = revenue_two_stage(m, S)
    assert rev.stage1 == pytest.approx(stage1, abs=2e-4)
    assert rev.stage2 == pytest.approx(stage2, abs=2e-4)


def test_functional_menu_continuum_matches_discretization():
    S = UNIFORM_SQUARE
    fm = half_approx_menu(S)
    exact = revenue_two_stage(fm, S)
    approx = revenue_two_stage(fm.discretize(), S)
    assert exact.total == pytest.approx(approx.total, abs=1e-3)
    assert isinstance(fm, FunctionalMenu)


def test_composite_option_values():
    S = TwoStageSetting(uniform(0, 1), discrete([1, 2], [0.5, 0.5]), power(2))
    assert composite_option_utility(4, CompositeOption(0.5, 1), S) == pytest.approx(17 / 8)
    assert composite_option_utility(2.5, CompositeOption(0.5, 1), S) == pytest.approx(7 / 4)
    posted = composite_option_utility(4, CompositeOption(0.5, 1, ("posted", 1.5)), S)
    assert posted < 17 / 8
    with pytest.raises(UnsupportedMechanismError):
        composite_option_utility(4, CompositeOption(0.5, 1, ("auction",)), S)
