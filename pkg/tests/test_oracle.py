from fractions import Fraction as Fr

import pytest

from riskmech.errors import BudgetExceededError, DomainError
from riskmech.oracle import (OracleBudget, brute_force_opt, monotonicity_counterexample,
                             rae_oracle, simulated_revenue)
from riskmech.valuedist import discrete, uniform
from riskmech.weighting import identity, power


def test_decision_weights_on_small_cases():
    assert rae_oracle([(Fr(1), Fr(1, 2)), (Fr(2), Fr(1, 2))], power(2)) == Fr(5, 4)
    assert rae_oracle([(Fr(0), Fr(1, 2)), (Fr(-1, 2), Fr(1, 4)), (Fr(-3, 2), Fr(1, 4))],
                      power(2)) == Fr(-13, 16)


def test_identity_opt_is_myerson():
    F = discrete([1, 2, 3], [0.5, 0.25, 0.25])
    res = brute_force_opt(F, identity())
    assert res.revenue == pytest.approx(F.myerson()[1], abs=1e-9)


def test_risk_aversion_beats_posted_price():
    F = discrete([0, 0.2, 0.4, 0.6, 0.8, 1.0], [1 / 6] * 6)
    res = brute_force_opt(F, power(2))
    assert res.revenue > F.myerson()[1] + 0.01
    assert simulated_revenue(res.menu, power(2), F) == pytest.approx(res.revenue)
    assert res.budget_used["complete"]


def test_option_cap_and_limits():
    F = discrete([1, 2, 3], [0.4, 0.3, 0.3])
    one = brute_force_opt(F, power(2), OracleBudget(k=1))
    assert len(one.menu) <= 1
    with pytest.raises(DomainError):
        brute_force_opt(uniform(0, 1), power(2))
    with pytest.raises(DomainError):
        brute_force_opt(discrete(list(range(1, 8)), [1 / 7] * 7), power(2))
    with pytest.raises(DomainError):
        OracleBudget(x_grid=1)


def test_time_limit_reports_best_so_far():
    F = discrete([1, 2, 3, 4, 5, 6], [1 / 6] * 6)
    with pytest.raises(BudgetExceededError) as info:
        brute_force_opt(F, power(2), OracleBudget(x_grid=41, time_limit_s=0.0))
    assert info.value.best is not None
    assert info.value.best.revenue >= 0


def test_counterexample_values():
    rep = monotonicity_counterexample(0.01)
    assert rep.revenue_y1 == pytest.approx((1 - 2 * 0.01 / 3) * 0.75, abs=1e-12)
    assert rep.revenue_y2 == pytest.approx(0.005, abs=1e-12)
    assert rep.non_crossing and not rep.monotone
    assert abs(rep.indifference_residual_y1) < 1e-12
    assert rep.strict_preference_y2
    with pytest.raises(DomainError):
        monotonicity_counterexample(0.5)
