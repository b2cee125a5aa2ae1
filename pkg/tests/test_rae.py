import math
from fractions import Fraction as Fr

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from riskmech.errors import DivergenceError, DomainError
from riskmech.oracle import rae_oracle
from riskmech.rae import (TailIntegral, as_outcomes, outcomes, rae_general, rae_nonneg,
                          rae_shift_check, weighted_tail_integral)
from riskmech.valuedist import discrete, equal_revenue, equal_revenue_bounded, uniform
from riskmech.weighting import extreme, identity, power, power_hinge, w_eps

WEIGHTINGS = [identity(), power(2), power(3), w_eps(0.3), extreme(0.25, 2), power_hinge(2, 1.5)]


@st.composite
def finite_payoffs(draw):
    size = draw(st.integers(1, 6))
    vals = draw(st.lists(st.integers(-20, 20), min_size=size, max_size=size))
    raw = draw(st.lists(st.integers(1, 9), min_size=size, max_size=size))
    total = sum(raw)
    return [(Fr(v, 4), Fr(r, total)) for v, r in zip(vals, raw)]


@given(pairs=finite_payoffs(), k=st.integers(1, 4), c=st.integers(-40, 40))
@settings(max_examples=200, deadline=None)
def test_shift_additivity_exact(pairs, k, c):
    assert rae_shift_check(outcomes(pairs), power(k), Fr(c, 8)) == 0


@given(pairs=finite_payoffs(), k=st.integers(1, 4))
@settings(max_examples=200, deadline=None)
def test_general_matches_decision_weight_oracle(pairs, k):
    assert rae_general(outcomes(pairs), power(k)) == rae_oracle(pairs, power(k))


@given(pairs=finite_payoffs())
@settings(max_examples=100, deadline=None)
def test_identity_is_expectation(pairs):
    dist = outcomes(pairs)
    assert rae_general(dist, identity()) == dist.mean()


@given(pairs=finite_payoffs(), k=st.integers(1, 4))
@settings(max_examples=100, deadline=None)
def test_risk_aversion_never_exceeds_mean(pairs, k):
    dist = outcomes(pairs)
    assert rae_general(dist, power(k)) <= dist.mean()


@given(pairs=finite_payoffs(), k=st.integers(2, 4))
@settings(max_examples=100, deadline=None)
def test_symmetric_payoffs_are_nonpositive(pairs, k):
    sym = [(v, m / 2) for v, m in pairs] + [(-v, m / 2) for v, m in pairs]
    assert rae_general(outcomes(sym), power(k)) <= 0


def test_concave_example_lines():
    y = power(2)
    for v, expected in [(Fr(1, 2), Fr(3, 4) * Fr(1, 2) - Fr(19, 16)),
                        (Fr(3, 2), Fr(1, 2) * Fr(3, 2) - Fr(15, 16)),
                        (Fr(5, 2), Fr(1, 4) * Fr(5, 2) - Fr(7, 16))]:
        pairs = [(0 * v, Fr(1, 2)), (v - 1, Fr(1, 4)), (v - 2, Fr(1, 4))]
        assert rae_general(outcomes(pairs), y) == expected


def test_outcomes_validation():
    with pytest.raises(DomainError):
        outcomes([(1.0, 0.5)])
    with pytest.raises(DomainError):
        outcomes([(math.inf, 1.0)])
    d = outcomes([(1, Fr(1, 2)), (1, Fr(1, 2)), (2, 0)])
    assert d.values == (1,) and d.probs == (1,)


def test_tail_integral_closed_forms():
    F = uniform(0, 1)
    assert weighted_tail_integral(F, power(2), 0.0) == pytest.approx(1 / 3, abs=1e-12)
    assert weighted_tail_integral(F, power(2), 0.5) == pytest.approx(1 / 24, abs=1e-12)
    T = TailIntegral(F, power(2))
    assert T(0.5) == pytest.approx(1 / 24, abs=1e-12)
    assert T.inverse(1 / 24) == pytest.approx(0.5, abs=1e-10)
    assert T.inverse(0.0) == 1.0


@given(t=st.floats(0.0, 1.0))
@settings(max_examples=50, deadline=None)
def test_tail_integral_uniform_power3(t):
    T = TailIntegral(uniform(0, 1), power(3))
    assert T(t) == pytest.approx((1 - t) ** 4 / 4, abs=1e-12)


def test_tail_integral_equal_revenue():
    n = 3.0
    F = equal_revenue_bounded(math.e**n)
    eps = 0.1
    expected = 2 * eps - math.exp(-n) + (1 + eps) * math.log(1 / eps)
    assert TailIntegral(F, w_eps(eps))(0.0) == pytest.approx(expected, abs=1e-9)
    assert rae_nonneg(equal_revenue(), power(2)) == pytest.approx(2.0, abs=1e-8)
    with pytest.raises(DivergenceError):
        TailIntegral(equal_revenue(), identity())


def test_discrete_tail_and_vectorization():
    F = discrete([1, 2], [0.5, 0.5])
    assert rae_nonneg(F, power(2)) == pytest.approx(1.25)
    T = TailIntegral(F, power(2))
    ts = np.linspace(0, 3, 31)
    assert np.allclose(T(ts), [T(float(t)) for t in ts])
    assert rae_general(as_outcomes(F), power(2)) == pytest.approx(1.25)
