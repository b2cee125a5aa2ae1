"""Mechanisms and checks that hold across many weighting functions at once."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, PreconditionError
from .lottery import Menu, choice_indices
from .oracle import OracleBudget, brute_force_opt
from .singleshot import REVENUE_GRID, revenue, revenue_between
from .valuedist import ValueDistribution
from .weighting import (WeightingFamily, WeightingFunction, evaluate, family_is_monotone,
                        family_is_non_crossing)

ORACLE_SLACK = 0.02


def myerson_robustness_gap(y: WeightingFunction, F: ValueDistribution,
                           budget: OracleBudget = OracleBudget()) -> float:
    """``Mye(F) / OPT`` with OPT estimated by the brute-force oracle."""
    if not F.is_discrete or len(F.atoms()) > 6:
        raise DomainError("robustness gap needs a discrete F with at most 6 points")
    opt = brute_force_opt(F, y, budget).revenue
    return F.myerson()[1] / opt


@dataclass(frozen=True)
class RevenueBoundCheck:
    """Revenue split at type ``t`` and the two bounds on the pieces.

    ``lhs_low`` is revenue from types below ``t`` and ``rhs_low = x(t) OPT``;
    ``lhs_high`` is revenue from types at or above ``t`` and
    ``rhs_high = Mye(F) / y(x(t))``.
    """

    lhs_low: float
    rhs_low: float
    lhs_high: float
    rhs_high: float
    opt: float
    opt_is_lower_bound: bool

    def holds(self, slack: float = 1e-9) -> bool:
        return self.lhs_low <= self.rhs_low + slack and self.lhs_high <= self.rhs_high + slack

    def as_tuple(self):
        return self.lhs_low, self.rhs_low, self.lhs_high, self.rhs_high


def bound_lemma_checks(m: Menu, y: WeightingFunction, F: ValueDistribution, t: float,
                       opt: float | None = None,
                       budget: OracleBudget = OracleBudget()) -> RevenueBoundCheck:
    """Evaluate both sides of the low-type and high-type revenue bounds at ``t``.

    OPT comes from the oracle for discrete ``F``.  Otherwise pass ``opt``; if
    omitted, the larger of the menu's own revenue and the Myerson revenue is
    used, a lower bound that makes the low-type check only harder.
    """
    if not m.is_binary:
        raise DomainError("the revenue bounds are stated for binary-lottery menus")
    lo, hi = F.support[0], F.grid_upper()
    grid = np.linspace(lo, hi, REVENUE_GRID + 1)
    xs = np.array([float(o.x) for o in m.options] + [0.0])
    alloc = xs[choice_indices(m, y, grid)]
    if np.any(np.diff(alloc) < -1e-12):
        raise PreconditionError("allocation rule induced by the menu is not monotone")
    exact_opt = opt is not None
    if opt is None:
        if F.is_discrete and len(F.atoms()) <= 6:
            opt = brute_force_opt(F, y, budget).revenue
        else:
            opt = max(revenue(m, y, F), F.myerson()[1])
    x_t = xs[choice_indices(m, y, [t])[0]]
    y_t = float(evaluate(y, x_t))
    low = revenue_between(m, y, F, -math.inf, t)
    high = revenue_between(m, y, F, t, math.inf)
    rhs_high = F.myerson()[1] / y_t if y_t > 0 else math.inf
    return RevenueBoundCheck(low, float(x_t) * opt, high, rhs_high, float(opt),
                      not exact_opt and not F.is_discrete)


def revenue_monotonicity_check(m: Menu, y1: WeightingFunction, y2: WeightingFunction,
                               F: ValueDistribution, enforce: bool = True) -> tuple[float, float]:
    """Revenues of one menu under ``y1 >= y2``.

    For a monotone non-crossing pair the more risk-averse ``y2`` never pays
    less.  With ``enforce`` the pair is validated first.
    """
    if enforce:
        pair = WeightingFamily((y1, y2))
        if not family_is_non_crossing(pair) or not family_is_monotone(pair):
            raise PreconditionError("weightings are not a monotone non-crossing pair")
        grid = np.linspace(0, 1, 1025)
        if np.any(evaluate(y1, grid) < evaluate(y2, grid) - 1e-12):
            raise PreconditionError("y1 must dominate y2 pointwise")
    return revenue(m, y1, F), revenue(m, y2, F)


# -- randomizing over bucket representatives -----------------------------------------------


@dataclass(frozen=True)
class LogLogMechanism:
    """Uniform mixture over one oracle menu per nonempty OPT bucket."""

    menus: tuple[Menu, ...]
    representatives: tuple[int, ...]
    buckets: tuple[tuple[int, ...], ...]
    thresholds: tuple[float, ...]
    n: int
    log_h: float
    opts: tuple[float, ...]
    diagnostics: list = field(default_factory=list)

    @property
    def factor(self) -> float:
        return self.n * self.log_h ** (1.0 / self.n)

    def revenue(self, y: WeightingFunction, F: ValueDistribution) -> float:
        """Exact mixture revenue (average over the menus)."""
        return float(np.mean([revenue(m, y, F) for m in self.menus]))

    def sample(self, rng: np.random.Generator) -> Menu:
        return self.menus[int(rng.integers(len(self.menus)))]


def _risk_order(family: WeightingFamily) -> list[int]:
    """Members from least to most risk averse (pointwise largest first)."""
    grid = np.linspace(0, 1, 1025)
    area = [float(np.mean(evaluate(y, grid))) for y in family]
    return sorted(range(len(family)), key=lambda i: -area[i])


def loglog_mechanism(family: WeightingFamily, F: ValueDistribution,
                     budget: OracleBudget = OracleBudget(),
                     slack: float = ORACLE_SLACK) -> LogLogMechanism:
    """Risk-robust menu for a monotone non-crossing family.

    OPT of every member is estimated with the oracle, members are bucketed
    by OPT on the geometric scale ``E[v] / (log H)^(i/n)`` with
    ``n = ceil(log log H)``, each bucket is served by the oracle menu of its
    least risk-averse member, and the mechanism picks a bucket uniformly.
    """
    if len(family) >= 2:
        if not family_is_non_crossing(family) or not family_is_monotone(family):
            raise PreconditionError("family must be monotone and non-crossing")
    H = F.support[1]
    if not math.isfinite(H):
        raise DomainError("the log-log mechanism needs a bounded value distribution")
    log_h = math.log(H) if H > 1 else 0.0
    n = max(1, math.ceil(math.log(log_h))) if log_h > 1 else 1
    mean = F.expectation()
    thresholds = tuple(mean / log_h ** (i / n) if log_h > 0 else mean for i in range(n + 1))

    results = [brute_force_opt(F, y, budget) for y in family]
    opts = tuple(r.revenue for r in results)
    bucket_of = []
    for o in opts:
        b = n
        for i in range(1, n + 1):
            if o > thresholds[i]:
                b = i
                break
        bucket_of.append(b)
    order = _risk_order(family)
    buckets, reps, menus = [], [], []
    for b in range(1, n + 1):
        members = tuple(i for i in order if bucket_of[i] == b)
        if not members:
            continue
        buckets.append(members)
        reps.append(members[0])
        menus.append(results[members[0]].menu)
    mech = LogLogMechanism(tuple(menus), tuple(reps), tuple(buckets), thresholds, n,
                           max(log_h, 1.0), opts)
    for i, y in enumerate(family):
        rev = mech.revenue(y, F)
        target = opts[i] / mech.factor
        mech.diagnostics.append({"member": y.label, "opt": opts[i], "revenue": rev,
                                 "guarantee": target,
                                 "pass": rev >= target * (1 - slack) - 1e-12})
    return mech
