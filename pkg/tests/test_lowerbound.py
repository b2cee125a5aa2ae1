import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad

from riskmech.errors import ConfigError, InfeasibleError, OutOfRangeError
from riskmech.lowerbound import (LowerBoundConfig, alpha_c, check_contradiction, eps_of_p,
                                 integrate_ode, p_eps, p_zero, p_zero_plus, u0_closed_form, u_eps,
                                 w_eps)


def test_w_eps_values():
    assert w_eps(0.25, 0.5) == 0.0625
    assert w_eps(0.7, 1.0) == pytest.approx(0.49)
    assert w_eps(0.7, 0.0) == pytest.approx(0.7)


@given(eps=st.floats(1e-3, 1.0), n=st.floats(1.0, 8.0), price=st.floats(0.0, 50.0))
@settings(max_examples=60, deadline=None)
def test_u_eps_matches_quadrature(eps, n, price):
    H = math.exp(n)
    f = lambda z: w_eps(min(1.0, 1.0 / z), eps) if z > 0 else 1.0  # noqa: E731
    top = max(price, 0.0)
    pts = [p for p in (1.0, 1.0 / eps) if top < p < H]
    expected = quad(f, top, H, points=pts or None, limit=400, epsabs=1e-12)[0] if top < H else 0.0
    assert u_eps(price, eps, n) == pytest.approx(expected, abs=1e-8)


@given(eps=st.floats(1e-6, 1.0), n=st.floats(1.0, 60.0))
@settings(max_examples=100, deadline=None)
def test_u0_closed_form_and_lower_bound(eps, n):
    value = u_eps(0.0, eps, n)
    assert value >= min(math.log(1 / eps), n) - 1e-12
    if eps >= math.exp(-n):
        assert value == pytest.approx(u0_closed_form(eps, n), abs=1e-10)


def test_u_eps_continuity_at_seams():
    eps, n = 0.1, 6.0
    for seam in (1.0, 1.0 / eps):
        assert abs(u_eps(seam - 1e-10, eps, n) - u_eps(seam + 1e-10, eps, n)) < 1e-8
    assert u_eps(math.exp(n), eps, n) == 0.0


def test_alpha_and_p_eps():
    assert alpha_c(2) == pytest.approx(math.exp(-1.5))
    n = 200.0
    eps = 1e-40
    p = p_eps(eps, 2, n)
    u0 = u_eps(0.0, eps, n)
    # 2 + ln p = (1 + ln U) / c
    assert 2 + math.log(p) == pytest.approx((1 + math.log(u0)) / 2, abs=1e-10)
    with pytest.raises(InfeasibleError):
        p_eps(0.3, 2, 30)
    with pytest.raises(InfeasibleError):
        p_eps(1e-5, 50, 30)  # large c: nothing near 1 is demanded


def test_eps_of_p_round_trip_and_range():
    for c, n in ((2, 30), (1.5, 60)):
        assert eps_of_p(p_eps(0.3, c, n, checked=False), c, n) == pytest.approx(0.3, abs=1e-10)
        assert eps_of_p(p_eps(1.0, c, n, checked=False), c, n) == pytest.approx(1.0, abs=1e-10)
    with pytest.raises(OutOfRangeError):
        eps_of_p(2.0, 2, 30)


def test_eps_p_bracket_on_one_to_two():
    c = 2.0
    N = (2 / alpha_c(c)) ** c
    n = 2 * N
    eps_star = math.exp(-N)
    for p in np.linspace(1.0, 2.0, 11):
        assert eps_star * (1 - 1e-9) <= eps_of_p(float(p), c, n) <= 1.0


def test_p0_grows_like_root_n():
    ratio = p_zero(2, 4000) / p_zero(2, 1000)
    assert ratio == pytest.approx(2.0, rel=1e-3)
    assert p_zero(2, 100) < p_zero_plus(2, 100)


def test_pure_square_regime_matches_closed_form():
    n = 10.0
    traj = integrate_ode(LowerBoundConfig(c=2, n=n, forced_eps=1.0, p_end=2.0))
    for p in np.linspace(1.0, 2.0, 201):
        exact = 1.0 / (math.exp(-n) + p - 1.0)
        assert traj.l_bar_at(float(p)) == pytest.approx(exact, rel=1e-6)
    assert traj.l_bar[0] == pytest.approx(math.exp(n), rel=1e-12)
    assert np.all(np.diff(traj.l_bar) < 0)


def test_slope_at_most_minus_one_after_one_over_eps_star():
    traj = integrate_ode(LowerBoundConfig(c=2, n=60.0, p_end=25.0))
    # s = p - 1 keeps the resolution that p loses near 1
    slopes = np.diff(traj.l_bar) / np.diff(traj.s)
    assert np.all(slopes <= -1 + 1e-6)


def test_report_fields_and_pure_square_crossing():
    report, traj = check_contradiction(LowerBoundConfig(c=2, n=10, forced_eps=1.0, p_end=2.0))
    assert report.l_bar_at_2 < 1
    assert report.p_cross_1 == pytest.approx(2 - math.exp(-10), abs=1e-9)
    doc = report.to_json()
    for key in ("c", "n", "alpha_c", "eps_star", "N", "p_eps_star", "l_bar_at_2", "p_cross_1",
                "p_0", "verdict"):
        assert key in doc


def test_hypothesis_of_check_holds_at_two_n():
    c = 2.0
    N = (2 / alpha_c(c)) ** c
    assert N == pytest.approx(80.342, abs=1e-3)
    report, traj = check_contradiction(LowerBoundConfig(c=c, n=2 * N))
    assert report.p_eps_star_at_least_2
    assert report.l_bar_at_2 <= report.inv_eps_star


def test_large_n_reaches_contradiction():
    report, _ = check_contradiction(LowerBoundConfig(c=2, n=10_000))
    assert report.verdict == "CONTRADICTION"
    assert report.p_cross_1 < report.p_0


def test_trajectory_csv(tmp_path):
    traj = integrate_ode(LowerBoundConfig(c=2, n=10, forced_eps=1.0))
    path = tmp_path / "t.csv"
    traj.write_csv(path)
    lines = path.read_text().splitlines()
    assert lines[0] == "p,l_bar,eps_p"
    assert len(lines) == len(traj.s) + 1


def test_config_validation():
    with pytest.raises(ConfigError):
        LowerBoundConfig(c=1.0)
    with pytest.raises(ConfigError):
        LowerBoundConfig(n=0.5)
    with pytest.raises(ConfigError):
        LowerBoundConfig(step=0)
