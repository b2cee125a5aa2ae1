"""Brute-force ground truth, written independently of the main code paths.

``rae_oracle`` uses rank-dependent decision weights instead of the
two-sided survival integral.  ``brute_force_opt`` searches binary-lottery
menus for small discrete value distributions.
"""
from __future__ import annotations

import itertools
import time
from dataclasses import asdict, dataclass
from typing import NamedTuple

import numpy as np
from scipy.optimize import minimize_scalar

from .errors import BudgetExceededError, DomainError
from .lottery import BinaryLottery, Menu, buyer_choice
from .valuedist import ValueDistribution, point_mass
from .weighting import (Check, WeightingFamily, WeightingFunction, evaluate, family_is_monotone,
                        family_is_non_crossing, power, power_hinge)


def rae_oracle(pairs, y: WeightingFunction):
    """Risk-averse expectation of a finite payoff via decision weights.

    With distinct values ``z_1 < ... < z_m`` the weight of ``z_i`` is
    ``y(P[Z >= z_i]) - y(P[Z > z_i])``.
    """
    merged: dict = {}
    for v, m in pairs:
        merged[v] = merged.get(v, 0) + m
    values = sorted(merged, reverse=True)
    total = 0 * values[0]
    above = 0 * merged[values[0]]
    w_above = evaluate(y, above)
    for v in values:
        at_least = above + merged[v]
        if at_least > 1:
            at_least = at_least / at_least
        w_at_least = evaluate(y, at_least)
        total += v * (w_at_least - w_above)
        above, w_above = at_least, w_at_least
    return total


# -- optimal menus for small discrete distributions -----------------------------------


@dataclass(frozen=True)
class OracleBudget:
    """Search effort for :func:`brute_force_opt`.

    ``x_grid`` allocation levels (evenly spaced, 0 and 1 included), at most
    ``k`` distinct options (``None`` means one per support point),
    ``refine_sweeps`` rounds of coordinate refinement, and a wall-clock limit.
    """

    x_grid: int = 21
    k: int | None = None
    refine_sweeps: int = 4
    time_limit_s: float = 60.0

    def __post_init__(self):
        if self.x_grid < 2:
            raise DomainError("x_grid must be at least 2")
        if self.k is not None and self.k < 1:
            raise DomainError("k must be at least 1")


class OracleResult(NamedTuple):
    menu: Menu
    revenue: float
    budget_used: dict

    def to_json(self) -> dict:
        return {"menu": self.menu.to_json(), "revenue": self.revenue,
                "budget_used": self.budget_used}


def _binding_revenue(vals, mass, x, w):
    """Revenue of allocations ``x`` (weights ``w``) with binding local IC.

    ``x`` and ``w`` are ``(..., m)`` arrays, nondecreasing along the last axis.
    The lowest type gets zero utility and each higher type is indifferent to
    the option just below it; those prices are the largest IC prices.
    """
    steps = np.diff(vals)
    rent = np.concatenate((np.zeros(x.shape[:-1] + (1,)),
                           np.cumsum(w[..., :-1] * steps, axis=-1)), axis=-1)
    charge = w * vals - rent
    with np.errstate(divide="ignore", invalid="ignore"):
        price = np.where(w > 0, charge / w, 0.0)
    return np.sum(mass * x * price, axis=-1), price


def _to_menu(x, price) -> Menu:
    opts = []
    for xi, pi in zip(x, price):
        if xi <= 0:
            continue
        opt = BinaryLottery(float(xi), float(max(pi, 0.0)))
        if opt not in opts:
            opts.append(opt)
    return Menu(tuple(opts))


def simulated_revenue(m: Menu, y: WeightingFunction, F: ValueDistribution) -> float:
    """Revenue by letting each type pick from the menu (oracle-side loop)."""
    total = 0.0
    for v, mass in F.atoms():
        c = buyer_choice(y, v, m)
        if c.index >= 0:
            total += mass * float(c.option.expected_payment)
    return total


def brute_force_opt(F: ValueDistribution, y: WeightingFunction,
                    budget: OracleBudget = OracleBudget()) -> OracleResult:
    """Best binary-lottery menu found for a discrete ``F`` with at most 6 atoms.

    Every nondecreasing assignment of grid allocations to types is priced by
    binding incentive constraints, the best one is refined coordinate-wise
    over continuous allocations, and the final menu is re-scored by buyer
    simulation.  The result is a lower bound on the optimal revenue.
    """
    if not F.is_discrete:
        raise DomainError("brute_force_opt needs a finite value distribution")
    atoms = F.atoms()
    if len(atoms) > 6:
        raise DomainError(f"brute_force_opt handles at most 6 support points, got {len(atoms)}")
    start = time.perf_counter()
    vals = np.array([v for v, _ in atoms])
    mass = np.array([m for _, m in atoms])
    n_types = vals.size
    k = budget.k or n_types
    grid = np.linspace(0.0, 1.0, budget.x_grid)
    wgrid = evaluate(y, grid)

    best_rev, best_x = -1.0, None
    combos = itertools.combinations_with_replacement(range(budget.x_grid), n_types)
    evaluated = 0
    while True:
        chunk = np.array(list(itertools.islice(combos, 65536)), dtype=int)
        if chunk.size == 0:
            break
        if k < n_types:
            nonzero = chunk > 0
            changes = np.sum(np.diff(chunk, axis=1) != 0, axis=1) + nonzero[:, 0]
            chunk = chunk[changes <= k]
        rev, _ = _binding_revenue(vals, mass, grid[chunk], wgrid[chunk])
        evaluated += len(chunk)
        i = int(np.argmax(rev)) if len(rev) else 0
        if len(rev) and rev[i] > best_rev + 1e-15:
            best_rev, best_x = float(rev[i]), grid[chunk[i]].copy()
        if time.perf_counter() - start > budget.time_limit_s:
            x = best_x if best_x is not None else np.zeros(n_types)
            _, price = _binding_revenue(vals, mass, x, evaluate(y, x))
            partial = _to_menu(x, price)
            raise BudgetExceededError(
                "oracle time limit hit during grid search",
                best=OracleResult(partial, simulated_revenue(partial, y, F),
                                  {"evaluated": evaluated, "complete": False}))

    x = _refine(best_x, vals, mass, y, budget.refine_sweeps, k)
    _, price = _binding_revenue(vals, mass, x, evaluate(y, x))
    found = _to_menu(x, price)
    rev = simulated_revenue(found, y, F)
    # the grid optimum is re-scored too, so refinement can never lose revenue
    _, grid_price = _binding_revenue(vals, mass, best_x, evaluate(y, best_x))
    grid_menu = _to_menu(best_x, grid_price)
    grid_rev = simulated_revenue(grid_menu, y, F)
    if grid_rev > rev:
        found, rev = grid_menu, grid_rev
    used = {"evaluated": evaluated, "x_grid": budget.x_grid, "k": k,
            "refine_sweeps": budget.refine_sweeps,
            "elapsed_s": time.perf_counter() - start, "complete": True}
    return OracleResult(found, rev, used)


def _refine(x0, vals, mass, y, sweeps: int, k: int):
    """Coordinate ascent on each type's allocation, keeping the order."""
    x = np.array(x0, dtype=float)
    if k < len(x) or sweeps <= 0:
        return x

    def objective(xs):
        return float(_binding_revenue(vals, mass, xs, evaluate(y, xs))[0])

    current = objective(x)
    for _ in range(sweeps):
        improved = False
        for i in range(len(x)):
            lo = x[i - 1] if i > 0 else 0.0
            hi = x[i + 1] if i + 1 < len(x) else 1.0
            if hi - lo < 1e-12:
                continue

            def neg(t, i=i):
                trial = x.copy()
                trial[i] = t
                return -objective(trial)

            res = minimize_scalar(neg, bounds=(lo, hi), method="bounded",
                                  options={"xatol": 1e-10})
            for cand in (res.x, lo, hi):
                trial = x.copy()
                trial[i] = cand
                val = objective(trial)
                if val > current + 1e-14:
                    x, current, improved = trial, val, True
        if not improved:
            break
    return x


# -- the non-monotone family ----------------------------------------------------------


@dataclass(frozen=True)
class CounterexampleReport:
    eps: float
    revenue_y1: float
    revenue_y2: float
    expected_y1: float
    expected_y2: float
    indifference_residual_y1: float
    strict_preference_y2: bool
    non_crossing: bool
    monotone: bool
    menu: list

    def to_json(self) -> dict:
        return asdict(self)


def monotonicity_counterexample(eps: float) -> CounterexampleReport:
    """Two ordered weightings where the less risk-averse buyer pays far more.

    ``y1 = max(3x/2 - 1/2, x^2)`` lies above ``y2 = x^2`` everywhere, yet a
    value-1 buyer pays about 3/4 under ``y1`` and only ``eps/2`` under ``y2``.
    """
    if not 0 < eps < 0.1:
        raise DomainError(f"eps must be in (0, 0.1), got {eps}")
    y1, y2 = power_hinge(2, 1.5), power(2)
    x1, p1, x2, p2 = 1 - 2 * eps / 3, 0.75, 0.5, eps
    m = Menu((BinaryLottery(x1, p1), BinaryLottery(x2, p2)))
    F = point_mass(1.0)
    family = WeightingFamily((y1, y2), name="hinge-vs-square")
    crossing = family_is_non_crossing(family)
    monotone = family_is_monotone(family) if crossing else Check(False)
    return CounterexampleReport(
        eps=eps,
        revenue_y1=simulated_revenue(m, y1, F),
        revenue_y2=simulated_revenue(m, y2, F),
        expected_y1=(1 - 2 * eps / 3) * 0.75,
        expected_y2=eps / 2,
        indifference_residual_y1=float(y1(x1) * (1 - p1) - y1(x2) * (1 - p2)),
        strict_preference_y2=bool(y2(x1) * (1 - p1) < y2(x2) * (1 - p2)),
        non_crossing=bool(crossing),
        monotone=bool(monotone),
        menu=m.to_json(),
    )
