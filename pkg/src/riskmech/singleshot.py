"""Selling one item to a risk-averse buyer with a menu of lotteries.

Revenue of a menu, the buyer's utility curve, its lower convex envelope and
the binarization that turns any menu into binary lotteries earning at least
as much; plus the payment identity and the welfare-extracting menu for very
risk-averse buyers.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy.optimize import brentq

from .errors import DegenerateError, DomainError, HypothesisViolationError, InvalidSubgradientError
from .lottery import (BinaryLottery, GeneralLottery, Lottery, Menu, choice_indices, pick,
                      utility_matrix)
from .valuedist import ValueDistribution
from .weighting import WeightingFunction, evaluate

REVENUE_GRID = 2**12
BINARIZE_GRID = 2**12


# -- revenue -------------------------------------------------------------------


@dataclass(frozen=True)
class Boundary:
    """Value at which the buyer's choice switches from one option to another."""

    v: float
    before: int
    after: int


def _pair_switch(m: Menu, y: WeightingFunction, a: float, b: float, i: int, j: int) -> float:
    """Point in ``[a, b]`` where option ``j`` overtakes option ``i``."""
    opts = [m.options[k] if k >= 0 else None for k in (i, j)]

    def gap(v):
        u = [0.0 if o is None else float(utility_matrix([o], y, [v])[0, 0]) for o in opts]
        return u[0] - u[1]

    ga, gb = gap(a), gap(b)
    if ga * gb < 0:
        v = brentq(gap, a, b, xtol=1e-15, rtol=8.9e-16)
    else:
        v = a if abs(ga) <= abs(gb) else b
    return float(v)


def choice_boundaries(m: Menu, y: WeightingFunction, lo: float, hi: float,
                      n: int = REVENUE_GRID, extra: Sequence[float] = ()) -> list[Boundary]:
    """Locate every change of the buyer's choice on ``[lo, hi]``.

    A grid sweep finds the cells where the choice changes; within a cell the
    indifference point of the two options is solved to ~1e-15.  Switches
    that start and end inside one grid cell are not seen.
    """
    if len(m) == 0 or hi <= lo:
        return []
    grid = _sweep_grid(m, lo, hi, n, extra)
    chosen = choice_indices(m, y, grid)
    out = []
    for k in np.flatnonzero(chosen[1:] != chosen[:-1]):
        i, j = int(chosen[k]), int(chosen[k + 1])
        out.append(Boundary(_pair_switch(m, y, grid[k], grid[k + 1], i, j), i, j))
    return out


def _sweep_grid(m: Menu, lo: float, hi: float, n: int, extra: Sequence[float]) -> np.ndarray:
    prices = [float(o.p) for o in m.options if isinstance(o, BinaryLottery)]
    pts = [p for p in list(prices) + list(extra) if lo < p < hi]
    return np.union1d(np.linspace(lo, hi, n + 1), pts)


def revenue(m: Menu, y: WeightingFunction, F: ValueDistribution, n: int = REVENUE_GRID) -> float:
    """Expected payment when the buyer's value is drawn from ``F``.

    Finite distributions are summed directly.  Otherwise the payment is
    piecewise constant in the value, so revenue is a sum over choice regions
    of payment times probability, with region ends from :func:`choice_boundaries`.
    """
    return revenue_between(m, y, F, -math.inf, math.inf, n)


def revenue_between(m: Menu, y: WeightingFunction, F: ValueDistribution, a: float, b: float,
                    n: int = REVENUE_GRID) -> float:
    """``E[payment(v); a <= v < b]``."""
    if len(m) == 0:
        return 0.0
    pays = m.payments()
    atoms = [(v, w) for v, w in F.atoms() if a <= v < b]
    total = 0.0
    if atoms:
        at = np.array([v for v, _ in atoms])
        mass = np.array([w for _, w in atoms])
        idx = choice_indices(m, y, at)
        total += float(np.sum(mass * np.where(idx >= 0, pays[idx], 0.0)))
    if F.is_discrete:
        return total
    lo, upper = F.support[0], F.grid_upper()
    start, stop = max(a, lo), min(b, upper)
    if start < stop:
        bounds = choice_boundaries(m, y, start, stop, n, extra=F.knots())
        edges = [start] + [s.v for s in bounds] + [stop]
        first = choice_indices(m, y, [start])[0]
        regions = [first] + [s.after for s in bounds]
        cont = np.array([F.cont_cdf(e) for e in edges])
        pay = np.array([pays[r] if r >= 0 else 0.0 for r in regions])
        total += float(np.sum(pay * np.diff(cont)))
    if not F.is_bounded and b > upper:
        # beyond the truncation quantile the choice is frozen at its last value
        edge = max(a, upper)
        last = choice_indices(m, y, [edge])[0]
        rest = 1.0 - F.cont_cdf(edge)
        total += (pays[last] if last >= 0 else 0.0) * max(rest, 0.0)
    return total


# -- utility curves ------------------------------------------------------------


@dataclass(frozen=True)
class UtilityCurve:
    """Sampled buyer utility ``u(v)`` with right-chord slopes.

    ``chosen``/``payment`` are present for curves read off a menu and absent
    for envelopes.  ``hull`` keeps the envelope vertices when available.
    """

    v: np.ndarray
    u: np.ndarray
    slopes: np.ndarray
    chosen: np.ndarray | None = None
    payment: np.ndarray | None = None
    hull: tuple[np.ndarray, np.ndarray] | None = None

    def rows(self):
        """CSV rows ``v, utility, chosen_option_index, expected_payment``."""
        chosen = self.chosen if self.chosen is not None else np.full(self.v.size, -1)
        pay = self.payment if self.payment is not None else np.full(self.v.size, np.nan)
        return list(zip(self.v.tolist(), self.u.tolist(), chosen.tolist(), pay.tolist()))


def _right_slopes(v: np.ndarray, u: np.ndarray) -> np.ndarray:
    s = np.diff(u) / np.diff(v)
    return np.append(s, s[-1]) if s.size else np.zeros_like(v)


def utility_curve(m: Menu, y: WeightingFunction, lo: float, hi: float, n: int) -> UtilityCurve:
    """Best-response utility on ``n`` evenly spaced values in ``[lo, hi]``."""
    if n < 2:
        raise DomainError("utility curve needs at least two grid points")
    v = np.linspace(lo, hi, n)
    if len(m) == 0:
        zero = np.zeros(n)
        return UtilityCurve(v, zero, zero.copy(), np.full(n, -1), zero.copy())
    util = utility_matrix(m.options, y, v)
    chosen = pick(util, m.payments())
    u = np.maximum(util.max(axis=1), 0.0)
    pay = np.where(chosen >= 0, m.payments()[chosen], 0.0)
    return UtilityCurve(v, u, _right_slopes(v, u), chosen, pay)


def lower_hull(v: np.ndarray, u: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Vertices of the lower convex hull of points sorted by ``v`` (monotone chain)."""
    hull: list[int] = []
    for k in range(v.size):
        while len(hull) >= 2:
            i, j = hull[-2], hull[-1]
            # drop j when it lies on or above the chord from i to k
            if (u[j] - u[i]) * (v[k] - v[i]) >= (u[k] - u[i]) * (v[j] - v[i]):
                hull.pop()
            else:
                break
        hull.append(k)
    idx = np.array(hull)
    return v[idx], u[idx]


def lower_convex_envelope(curve: UtilityCurve) -> UtilityCurve:
    """Largest convex function below the sampled curve, on the same grid.

    ``slopes`` are the right-chord slopes of the hull, i.e. the largest
    subgradient at each grid point.
    """
    hv, hu = lower_hull(curve.v, curve.u)
    u = np.interp(curve.v, hv, hu)
    seg = np.diff(hu) / np.diff(hv) if hv.size > 1 else np.zeros(1)
    k = np.clip(np.searchsorted(hv, curve.v, side="right") - 1, 0, seg.size - 1)
    return UtilityCurve(curve.v, u, seg[k], hull=(hv, hu))


# -- binarization --------------------------------------------------------------


def dominate_binary(lot: Lottery) -> BinaryLottery:
    """Binary lottery with the same sale probability and expected payment.

    Its utility is at least that of ``lot`` at every value.
    """
    if isinstance(lot, BinaryLottery):
        return lot
    x = lot.alloc_prob
    pay = lot.expected_payment
    if x == 0:
        if pay > 0:
            raise DegenerateError("lottery charges without ever allocating")
        return BinaryLottery(0 * pay, 0 * pay)
    return BinaryLottery(x, pay / x)


def binarize(m: Menu, y: WeightingFunction, F: ValueDistribution,
             n: int = BINARIZE_GRID) -> Menu:
    """Replace a menu by binary lotteries tangent to its convex utility envelope.

    On each hull segment with slope ``m0 > 0`` the new option is
    ``x = y^{-1}(m0)``, ``p = v0 - u(v0)/m0``, so its utility line is the
    segment itself.  Flat segments correspond to the null option.
    """
    lo, hi = F.support[0], F.grid_upper()
    if hi <= lo:
        hi = lo + 1.0
    env = lower_convex_envelope(utility_curve(m, y, lo, hi, n))
    hv, hu = env.hull
    opts: list[BinaryLottery] = []
    for a in range(hv.size - 1):
        slope = (hu[a + 1] - hu[a]) / (hv[a + 1] - hv[a])
        if slope > 1 + 1e-9:
            raise InvalidSubgradientError(f"envelope slope {slope} exceeds 1 at v={hv[a]}")
        if slope <= 1e-12:
            continue
        slope = min(slope, 1.0)
        x = float(y.inverse(slope))
        p = max(float(hv[a] - hu[a] / slope), 0.0)
        opt = BinaryLottery(x, p)
        if opt not in opts:
            opts.append(opt)
    return Menu(tuple(opts))


# -- payment identity -------------------------------------------------------------


def menu_rules(m: Menu, y: WeightingFunction, grid) -> tuple[np.ndarray, np.ndarray]:
    """Allocation ``x(v)`` and price-on-allocation ``p(v)`` of a binary menu."""
    if not m.is_binary:
        raise DomainError("menu_rules needs a menu of binary lotteries")
    grid = np.asarray(grid, dtype=float)
    idx = choice_indices(m, y, grid)
    xs = np.array([float(o.x) for o in m.options] + [0.0])
    ps = np.array([float(o.p) for o in m.options] + [0.0])
    return xs[idx], ps[idx]


def payment_identity_residual(alloc, price, y: WeightingFunction, grid,
                              rule: str = "left") -> float:
    """Largest gap in ``y(x(v)) p(v) = y(x(v)) v - int_0^v y(x(z)) dz`` on a grid.

    ``alloc``/``price`` are arrays on ``grid`` or callables.  The integral
    uses the left-endpoint rule by default, which is exact for the
    right-continuous step rules a menu induces; ``rule="trapezoid"`` is the
    smooth-rule alternative.
    """
    v = np.asarray(grid, dtype=float)
    x = np.asarray(alloc(v) if callable(alloc) else alloc, dtype=float)
    p = np.asarray(price(v) if callable(price) else price, dtype=float)
    w = evaluate(y, x)
    if rule == "left":
        cells = w[:-1] * np.diff(v)
    elif rule == "trapezoid":
        cells = 0.5 * (w[:-1] + w[1:]) * np.diff(v)
    else:
        raise DomainError(f"unknown integration rule {rule!r}")
    # the grid may start above zero; the rule is constant below its first point
    integral = w[0] * v[0] + np.concatenate(([0.0], np.cumsum(cells)))
    return float(np.max(np.abs(w * p - (w * v - integral))))


# -- welfare extraction --------------------------------------------------------------


def welfare_extraction_menu(eps: float, H: float, y: WeightingFunction) -> Menu:
    """Options ``(y^{-1}(2^{-(i-1)}), H - i*eps)`` for ``i = 1..ceil(H/eps)``.

    Requires ``y(1 - eps) <= 2^{-H/eps}``: the buyer is so risk averse that
    each halving of the weight costs more than one price step.
    """
    if not 0 < eps < 1 or H <= 1:
        raise DomainError(f"need 0 < eps < 1 and H > 1, got eps={eps}, H={H}")
    cap = 2.0 ** (-H / eps)
    if evaluate(y, 1.0 - eps) > cap * (1 + 1e-12):
        raise HypothesisViolationError(
            f"y(1 - eps) = {evaluate(y, 1.0 - eps):.3g} exceeds 2^(-H/eps) = {cap:.3g}")
    count = math.ceil(H / eps - 1e-9)
    opts = [BinaryLottery(float(y.inverse(2.0 ** -(i - 1))), max(H - i * eps, 0.0))
            for i in range(1, count + 1)]
    return Menu(tuple(opts))


def welfare_extraction_bound(eps: float, H: float, y: WeightingFunction,
                             F: ValueDistribution) -> float:
    """Guaranteed revenue ``y^{-1}(2^{-(H/eps - 1)}) (E[v] - 2 eps)`` of that menu."""
    return float(y.inverse(2.0 ** -(H / eps - 1))) * (F.expectation() - 2 * eps)


def expected_payment_rule(m: Menu, y: WeightingFunction) -> Callable:
    """``v -> `` expected payment of the option chosen at ``v`` (vectorized)."""
    pays = np.append(m.payments(), 0.0)
    return lambda v: pays[choice_indices(m, y, np.atleast_1d(v))]
