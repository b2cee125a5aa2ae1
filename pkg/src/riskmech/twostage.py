"""Two-stage selling: a first-stage price bundled with a promised second-stage price.

A buyer who pays ``p`` now is offered the second item later at ``l(p)``.
Facing that offer is worth ``U(l) = int_l^inf y(P[v2 > z]) dz`` to him
today, so an option is ranked by its effective price ``p - U(l(p))``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, NamedTuple

import numpy as np

from .errors import DegenerateError, DomainError, UnsupportedMechanismError
from .rae import TailIntegral, closed_form_tail, outcomes, rae_general
from .valuedist import ValueDistribution
from .weighting import WeightingFunction

TIE_TOL = 1e-12
FUNCTIONAL_OPTIONS = 2**12


@dataclass(frozen=True)
class TwoStageSetting:
    """Independent stage values ``v1 ~ F1``, ``v2 ~ F2`` and one weighting ``y``."""

    F1: ValueDistribution
    F2: ValueDistribution
    y: WeightingFunction

    @cached_property
    def tail(self) -> TailIntegral:
        return TailIntegral(self.F2, self.y)

    def U(self, p2: float) -> float:
        return second_stage_utility(p2, self)

    def U_inverse(self, level: float) -> float:
        """Second-stage price whose continuation value is ``level``."""
        return self.tail.inverse(level)

    @property
    def label(self) -> str:
        return f"F1={self.F1.label} F2={self.F2.label} y={self.y.label}"


def second_stage_utility(p2: float, setting: TwoStageSetting) -> float:
    """``U(p2)``: risk-averse value of facing a posted price ``p2`` for item 2."""
    if p2 < 0:
        raise DomainError(f"second-stage price must be >= 0, got {p2}")
    if math.isinf(p2):
        return 0.0
    F2, y = setting.F2, setting.y
    closed = closed_form_tail(F2, y, p2)
    if closed is not None:
        return closed
    if F2.kind == "equal_revenue_bounded" and y.kind == "w_eps":
        from .lowerbound import u_eps

        return u_eps(p2, y.params[0], math.log(F2.params[0]))
    return float(setting.tail(p2))


def stage2_sale_revenue(q: float, F2: ValueDistribution) -> float:
    """Seller's stage-2 revenue from posting ``q`` (buyer buys when ``v2 >= q``)."""
    if math.isinf(q):
        return 0.0
    return float(q * F2.sf_ge(q))


# -- menus -------------------------------------------------------------------------


@dataclass(frozen=True)
class PostedPriceMenu:
    """Finitely many options ``(p, l(p))``.

    ``outside_price`` is the second-stage price a buyer faces after buying
    nothing in stage one; the default ``inf`` means no second-stage offer.
    """

    prices: tuple[float, ...]
    seconds: tuple[float, ...]
    outside_price: float = math.inf

    def __post_init__(self):
        if len(self.prices) != len(self.seconds):
            raise DomainError("prices and second-stage prices must align")
        if any(p < 0 for p in self.prices) or any(q < 0 for q in self.seconds):
            raise DomainError("prices must be nonnegative")

    @classmethod
    def from_pairs(cls, pairs, outside_price: float = math.inf) -> "PostedPriceMenu":
        pairs = sorted((float(p), float(q)) for p, q in pairs)
        return cls(tuple(p for p, _ in pairs), tuple(q for _, q in pairs), outside_price)

    def __len__(self):
        return len(self.prices)

    def pairs(self):
        return list(zip(self.prices, self.seconds))

    def second_for(self, p: float) -> float:
        for pi, qi in zip(self.prices, self.seconds):
            if pi == p:
                return qi
        raise DomainError(f"price {p} is not on the menu")

    def to_json(self) -> dict:
        return {"options": [[p, q] for p, q in self.pairs()],
                "outside_price": None if math.isinf(self.outside_price) else self.outside_price}


@dataclass(frozen=True)
class FunctionalMenu:
    """Options ``(p, l(p))`` for every ``p`` in ``[p_lo, p_hi]``."""

    second: Callable[[float], float] = field(compare=False)
    p_lo: float
    p_hi: float
    outside_price: float = math.inf
    n_options: int = FUNCTIONAL_OPTIONS
    name: str = ""

    def second_for(self, p: float) -> float:
        if not self.p_lo - 1e-15 <= p <= self.p_hi + 1e-15:
            raise DomainError(f"price {p} outside [{self.p_lo}, {self.p_hi}]")
        return float(self.second(p))

    def discretize(self) -> PostedPriceMenu:
        grid = np.linspace(self.p_lo, self.p_hi, self.n_options)
        return PostedPriceMenu(tuple(grid.tolist()), tuple(self.second(p) for p in grid),
                               self.outside_price)

    def to_json(self) -> dict:
        return {"functional": self.name or "l(p)", "p_lo": self.p_lo, "p_hi": self.p_hi,
                "outside_price": None if math.isinf(self.outside_price) else self.outside_price}


def effective_price(p: float, m, setting: TwoStageSetting) -> float:
    """``p - U(l(p))``."""
    return p - second_stage_utility(m.second_for(p), setting)


def _effective(m: PostedPriceMenu, setting: TwoStageSetting) -> np.ndarray:
    return np.array([p - second_stage_utility(q, setting) for p, q in m.pairs()], dtype=float)


def prune(m: PostedPriceMenu, setting: TwoStageSetting) -> PostedPriceMenu:
    """Drop options no buyer picks: those beaten by a cheaper, lower-effective-price option.

    The survivors have effective prices nonincreasing in ``p``.
    """
    order = sorted(range(len(m)), key=lambda i: m.prices[i])
    eff = _effective(m, setting)
    keep: list[int] = []
    for i in order:
        if keep and m.prices[keep[-1]] == m.prices[i]:
            # same first-stage price: the lower effective price wins outright
            if eff[i] < eff[keep[-1]] - TIE_TOL:
                keep[-1] = i
            continue
        best = min((eff[k] for k in keep), default=math.inf)
        if eff[i] <= best + TIE_TOL:
            keep.append(i)
    return PostedPriceMenu(tuple(m.prices[i] for i in keep), tuple(m.seconds[i] for i in keep),
                           m.outside_price)


class TwoStageChoice(NamedTuple):
    p: float
    second: float
    effective: float
    utility: float


def buyer_choice_two_stage(v1: float, m, setting: TwoStageSetting) -> TwoStageChoice | None:
    """Affordable option with the lowest effective price (ties: largest ``p``).

    Returns None when nothing is affordable or buying is worse than the
    outside option.
    """
    menu = m.discretize() if isinstance(m, FunctionalMenu) else m
    outside = second_stage_utility(menu.outside_price, setting)
    best = None
    for (p, q), e in zip(menu.pairs(), _effective(menu, setting)):
        if p > v1:
            continue
        if best is None or e < best.effective - TIE_TOL or (
                e <= best.effective + TIE_TOL and p > best.p):
            best = TwoStageChoice(p, q, e, v1 - e)
    if best is None or best.utility < outside - TIE_TOL:
        return None
    return best


# -- revenue -----------------------------------------------------------------------


class TwoStageRevenue(NamedTuple):
    stage1: float
    stage2: float
    total: float


def _mass(F: ValueDistribution, a: float, b: float) -> float:
    """``P[a <= V < b]``."""
    if b <= a:
        return 0.0
    upper = 1.0 if math.isinf(b) else F.cdf_left(b)
    return float(upper - F.cdf_left(a))


def revenue_two_stage(m, setting: TwoStageSetting) -> TwoStageRevenue:
    """Expected stage-1 and stage-2 payments of a posted-price menu.

    Finite menus are pruned; then a buyer with ``v1`` in ``[p_j, p_{j+1})``
    takes option ``j`` if it beats the outside option, so the revenue is a
    finite sum over those intervals.  A functional menu whose effective price
    is constant is handled as a continuum; other functional menus are
    discretized.
    """
    if isinstance(m, FunctionalMenu):
        flat = _constant_effective(m, setting)
        if flat is not None:
            return _continuum_revenue(m, setting, flat)
        m = m.discretize()
    F1, F2 = setting.F1, setting.F2
    outside_rev = stage2_sale_revenue(m.outside_price, F2)
    if len(m) == 0:
        return TwoStageRevenue(0.0, outside_rev, outside_rev)
    kept = prune(m, setting)
    eff = _effective(kept, setting)
    outside = second_stage_utility(kept.outside_price, setting)
    stage1 = stage2 = covered = 0.0
    bounds = list(kept.prices[1:]) + [math.inf]
    for (p, q), e, nxt in zip(kept.pairs(), eff, bounds):
        mass = _mass(F1, max(p, e + outside), nxt)
        if mass <= 0:
            continue
        covered += mass
        stage1 += p * mass
        stage2 += stage2_sale_revenue(q, F2) * mass
    stage2 += outside_rev * max(1.0 - covered, 0.0)
    return TwoStageRevenue(stage1, stage2, stage1 + stage2)


def _constant_effective(m: FunctionalMenu, setting: TwoStageSetting, tol: float = 1e-9):
    grid = np.linspace(m.p_lo, m.p_hi, 257)
    eff = np.array([p - second_stage_utility(m.second(p), setting) for p in grid])
    return float(eff.mean()) if np.ptp(eff) <= tol else None


def _continuum_revenue(m: FunctionalMenu, setting: TwoStageSetting, eff: float) -> TwoStageRevenue:
    """Every option has the same effective price, so the buyer takes the largest affordable ``p``."""
    F1, F2 = setting.F1, setting.F2
    outside = second_stage_utility(m.outside_price, setting)
    start = max(m.p_lo, eff + outside, 0.0)
    cap = m.p_hi
    if start > cap:
        rest = stage2_sale_revenue(m.outside_price, F2)
        return TwoStageRevenue(0.0, rest, rest)
    buy = float(F1.sf_ge(start))
    stage1 = F1.expected_min(cap) - F1.expected_min(start) + start * buy

    def sale(p):
        return stage2_sale_revenue(m.second(min(p, cap)), F2)

    stage2 = F1.expect(sale, lo=start, hi=cap) + sale(cap) * float(F1.sf_ge(cap))
    stage2 += stage2_sale_revenue(m.outside_price, F2) * (1.0 - buy)
    return TwoStageRevenue(stage1, stage2, stage1 + stage2)


def choice_rows(m, setting: TwoStageSetting, grid) -> list[tuple]:
    """CSV rows ``v1, chosen_p, chosen_l, stage1_pay, stage2_expected_pay``."""
    menu = m.discretize() if isinstance(m, FunctionalMenu) else m
    rows = []
    for v in grid:
        c = buyer_choice_two_stage(float(v), menu, setting)
        if c is None:
            q = menu.outside_price
            rows.append((float(v), math.nan, q, 0.0, stage2_sale_revenue(q, setting.F2)))
        else:
            rows.append((float(v), c.p, c.second, c.p, stage2_sale_revenue(c.second, setting.F2)))
    return rows


# -- bounds and mechanisms -----------------------------------------------------------


def upper_bound(setting: TwoStageSetting) -> float:
    """``Mye(F1) + Mye(F2) + E[min(v1, U(0))]``."""
    u0 = second_stage_utility(0.0, setting)
    return setting.F1.myerson()[1] + setting.F2.myerson()[1] + setting.F1.expected_min(u0)


def half_approx_menu(setting: TwoStageSetting) -> FunctionalMenu:
    """Options ``(p, U^{-1}(p))`` for ``p`` in ``[0, U(0)]``: every effective price is 0."""
    u0 = second_stage_utility(0.0, setting)
    if u0 <= 0:
        raise DegenerateError("U(0) = 0: the second stage is worthless to the buyer")
    return FunctionalMenu(setting.U_inverse, 0.0, u0, name="U^-1")


def myerson_menu(setting: TwoStageSetting) -> PostedPriceMenu:
    """Independent Myerson prices in both stages (the stage-2 price is offered to everyone)."""
    p1 = setting.F1.myerson()[0]
    p2 = setting.F2.myerson()[0]
    return PostedPriceMenu((p1,), (p2,), outside_price=p2)


class BestTwoStage(NamedTuple):
    menu: object
    revenue: float
    candidates: dict


def best_two_stage(setting: TwoStageSetting) -> BestTwoStage:
    """Better of per-stage Myerson pricing and the ``U^{-1}`` menu."""
    cands = {"myerson": myerson_menu(setting)}
    try:
        cands["half_approx"] = half_approx_menu(setting)
    except DegenerateError:
        pass
    revs = {name: revenue_two_stage(m, setting).total for name, m in cands.items()}
    name = max(revs, key=revs.get)
    return BestTwoStage(cands[name], revs[name], revs)


# -- composite first-stage options -----------------------------------------------------------


@dataclass(frozen=True)
class CompositeOption:
    """Allocate item 1 w.p. ``x`` at price ``p`` (charged on allocation), then run ``mechanism``.

    ``mechanism`` is ``("posted", q)`` or ``("giveaway",)``.
    """

    x: float
    p: float
    mechanism: tuple = ("giveaway",)

    def __post_init__(self):
        if not 0 <= self.x <= 1 or self.p < 0:
            raise DomainError("need 0 <= x <= 1 and p >= 0")


def composite_option_utility(v1, opt: CompositeOption, setting: TwoStageSetting):
    """Risk-averse utility of a composite option, over the joint outcome set.

    Each outcome combines the item-1 draw with a second-stage value and the
    buyer's ex-post surplus there (``max(0, v2 - q)`` for a posted price,
    ``v2`` for a giveaway).
    """
    F2 = setting.F2
    if not F2.is_discrete:
        raise DomainError("composite options need a finite second-stage distribution")
    kind = opt.mechanism[0]
    if kind == "giveaway":
        surplus = lambda v2: v2
    elif kind == "posted":
        q = opt.mechanism[1]
        surplus = lambda v2: max(0 * v2, v2 - q)
    else:
        raise UnsupportedMechanismError(f"unsupported second-stage mechanism {kind!r}")
    pairs = []
    for v2, mass in F2.atoms():
        s = surplus(v2)
        if opt.x:
            pairs.append((v1 - opt.p + s, opt.x * mass))
        if opt.x != 1:
            pairs.append((s, (1 - opt.x) * mass))
    return rae_general(outcomes(pairs), setting.y)
