
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from helpers import random_general_menu
from riskmech.errors import HypothesisViolationError
from riskmech.lottery import BinaryLottery, Menu, general_lottery
from riskmech.singleshot import (binarize, choice_boundaries, dominate_binary,
                                 expected_payment_rule, lower_convex_envelope, lower_hull,
                                 menu_rules, payment_identity_residual, revenue, utility_curve,
                                 welfare_extraction_bound, welfare_extraction_menu)
from riskmech.valuedist import discrete, equal_revenue, uniform
from riskmech.weighting import extreme, identity, power

EXAMPLE = Menu((BinaryLottery(1, 0.5), BinaryLottery(0.5, 0.375)))


def test_example_revenue_and_boundaries():
    y, F = power(2), uniform(0, 1)
    assert revenue(EXAMPLE, y, F) == pytest.approx(25 / 96, abs=1e-12)
    bounds = choice_boundaries(EXAMPLE, y, 0.0, 1.0)
    assert [b.v for b in bounds] == pytest.approx([0.375, 13 / 24], abs=1e-12)
    assert [(b.before, b.after) for b in bounds] == [(-1, 1), (1, 0)]


def test_posted_price_revenue_matches_myerson():
    for F in (uniform(0, 1), discrete([1, 2, 3], [0.3, 0.3, 0.4])):
        p, r = F.myerson()
        assert revenue(Menu((BinaryLottery(1, p),)), power(2), F) == pytest.approx(r, abs=1e-9)


def test_revenue_on_unbounded_law():
    m = Menu((BinaryLottery(1, 3.0),))
    assert revenue(m, power(2), equal_revenue()) == pytest.approx(1.0, abs=1e-6)


def test_lower_hull_is_convex_and_below():
    rng = np.random.default_rng(1)
    v = np.linspace(0, 1, 200)
    u = rng.normal(size=200).cumsum()
    hv, hu = lower_hull(v, u)
    slopes = np.diff(hu) / np.diff(hv)
    assert np.all(np.diff(slopes) >= -1e-12)
    assert np.all(np.interp(v, hv, hu) <= u + 1e-12)


def test_dominate_binary_keeps_sale_and_payment():
    lot = general_lottery([(0, 0, 0.5), (1, 1, 0.25), (1, 2, 0.25)])
    b = dominate_binary(lot)
    assert (b.x, b.p) == (0.5, 1.5)


@given(seed=st.integers(0, 10_000))
@settings(max_examples=15, deadline=None)
def test_binarization_never_loses_revenue(seed):
    rng = np.random.default_rng(seed)
    m = random_general_menu(rng)
    y, F = power(int(rng.integers(1, 4))), uniform(0, 1)
    env = lower_convex_envelope(utility_curve(m, y, 0.0, 1.0, 2049))
    assert env.slopes.min() >= -1e-12 and env.slopes.max() <= 1 + 1e-9
    assert revenue(binarize(m, y, F), y, F) >= revenue(m, y, F) - 1e-4


def test_binarize_example_revenue():
    lot = general_lottery([(0, 0, 0.5), (1, 0.9, 0.25), (1, 0.1, 0.25)])
    m = Menu((lot,))
    y, F = power(2), uniform(0, 1)
    assert revenue(binarize(m, y, F), y, F) >= revenue(m, y, F) - 1e-4


def test_payment_identity_for_menu_rules():
    y = power(2)
    grid = np.linspace(0, 1, 4097)
    x, p = menu_rules(EXAMPLE, y, grid)
    assert payment_identity_residual(x, p, y, grid) < 5e-4
    pay = expected_payment_rule(EXAMPLE, y)
    assert pay(0.9)[0] == pytest.approx(0.5)


def test_welfare_extraction_menu():
    y = extreme(0.25, 4)
    m = welfare_extraction_menu(0.25, 4, y)
    assert len(m) == 16
    F = uniform(1, 4)
    assert revenue(m, y, F) >= welfare_extraction_bound(0.25, 4, y, F) - 1e-6
    with pytest.raises(HypothesisViolationError):
        welfare_extraction_menu(0.25, 4, identity())


def test_small_welfare_menu_prices():
    eps, H = 0.5, 2.0
    m = welfare_extraction_menu(eps, H, extreme(eps, H))
    assert [o.p for o in m] == [1.5, 1.0, 0.5, 0.0]
