import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from riskmech.errors import DomainError
from riskmech.valuedist import (ValueDistribution, discrete, equal_revenue, equal_revenue_bounded,
                                point_mass, tabulated, uniform)


def laws():
    return [uniform(0, 1), uniform(1, 4), point_mass(2.0), discrete([1, 2, 3], [0.2, 0.5, 0.3]),
            equal_revenue_bounded(50.0), equal_revenue(), tabulated([0, 1, 2], [0.1, 0.4, 1.0])]


@pytest.mark.parametrize("F", laws(), ids=lambda F: F.label)
def test_cdf_is_monotone_with_left_limits(F):
    vs = np.linspace(0, 60, 601)
    c = np.array([F.cdf(v) for v in vs])
    cl = np.array([F.cdf_left(v) for v in vs])
    assert np.all(np.diff(c) >= -1e-15)
    assert np.all(cl <= c + 1e-15)
    assert np.allclose([F.sf_ge(v) for v in vs], 1 - cl)


@pytest.mark.parametrize("F", laws(), ids=lambda F: F.label)
@given(q=st.floats(0.001, 0.999))
@settings(max_examples=30, deadline=None)
def test_quantile_inverts_cdf(F, q):
    v = F.quantile(q)
    assert F.cdf(v) >= q - 1e-12
    assert F.cdf_left(v) <= q + 1e-12


@pytest.mark.parametrize("F", [F for F in laws() if F.kind != "equal_revenue"],
                         ids=lambda F: F.label)
@given(cap=st.floats(0.0, 60.0))
@settings(max_examples=30, deadline=None)
def test_expected_min_matches_expect(F, cap):
    direct = F.expect(lambda v: min(v, cap))
    assert F.expected_min(cap) == pytest.approx(direct, abs=1e-8)


def test_equal_revenue_closed_forms():
    F = equal_revenue()
    assert F.expected_min(math.e**2) == pytest.approx(3.0)
    assert F.expectation() == math.inf
    assert F.myerson() == (1.0, 1.0)
    G = equal_revenue_bounded(math.e**3)
    assert G.expectation() == pytest.approx(4.0)
    assert G.sf_ge(G.params[0]) == pytest.approx(1 / G.params[0])


def test_myerson_uniform_and_discrete():
    p, r = uniform(0, 1).myerson()
    assert p == pytest.approx(0.5, abs=1e-9) and r == pytest.approx(0.25, abs=1e-12)
    assert discrete([1, 2], [0.5, 0.5]).myerson() == (1.0, 1.0)  # tie -> smaller price
    p, r = discrete([1, 3], [0.5, 0.5]).myerson()
    assert (p, r) == (3.0, 1.5)


def test_discrete_merges_and_validates():
    F = discrete([2, 1, 2], [0.25, 0.5, 0.25])
    assert F.atoms() == ((1.0, 0.5), (2.0, 0.5))
    with pytest.raises(DomainError):
        discrete([1, 2], [0.5, 0.6])
    with pytest.raises(DomainError):
        uniform(2, 1)


def test_round_trip_and_n_parameter():
    for F in laws():
        assert ValueDistribution.from_dict(F.to_dict()) == F
    G = ValueDistribution.from_dict({"kind": "equal_revenue_bounded", "params": {"n": 2.0}})
    assert G.params[0] == pytest.approx(math.e**2)


def test_unbounded_grid_upper():
    assert equal_revenue().grid_upper() == pytest.approx(1e10, rel=1e-6)
