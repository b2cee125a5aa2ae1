"""The w_eps construction behind the two-stage risk-robust impossibility.

Stage one has unbounded equal-revenue values, stage two has equal-revenue
values capped at ``H = e^n``.  A menu that approximates every ``w_eps``
buyer within a factor ``c`` must promise second-stage prices ``l_bar(p)``
obeying ``-l_bar'(p) = 1 / w_{eps_p}(1 / l_bar)`` with ``l_bar(1) = e^n``.
This module integrates that equation and reports whether ``l_bar`` falls to
1 before the price ``p_0`` at which it is required to stay above 1.

Everything is kept in terms of ``t = ln(1/eps)`` and ``n`` so that ``e^n``
and tiny ``eps`` never have to be formed.
"""
from __future__ import annotations

import csv
import math
from dataclasses import asdict, dataclass

import numpy as np
from scipy.integrate import solve_ivp
from scipy.interpolate import PchipInterpolator
from scipy.optimize import brentq

from .errors import ConfigError, DomainError, InfeasibleError, OutOfRangeError, StiffnessError
from .valuedist import equal_revenue

EPS_GRID = 4001
T_MARGIN = 40.0  # eps below e^{-(n + T_MARGIN)} is indistinguishable from 0


def w_eps(x: float, eps: float) -> float:
    """``x^2`` up to ``eps``, then the chord to ``(1, 1)``."""
    if not (0 <= x <= 1 and 0 <= eps <= 1):
        raise DomainError(f"need x, eps in [0, 1], got x={x}, eps={eps}")
    return x * x if x <= eps else (1 + eps) * x - eps


def _log_eps(eps: float) -> float:
    if not 0 <= eps <= 1:
        raise DomainError(f"eps must be in [0, 1], got {eps}")
    return math.inf if eps == 0 else -math.log(eps)


def u_eps(price: float, eps: float, n: float) -> float:
    """``int_price^{e^n} w_eps(1/z) dz``, the value of facing a second-stage price.

    Values above 1 contribute ``1/z`` on the linear part of ``w_eps`` and
    ``1/z^2`` above ``1/eps``; values below 1 always clear the price.
    """
    if price < 0:
        raise DomainError(f"price must be >= 0, got {price}")
    return _u_from_t(price, _log_eps(eps), n)


def _u_from_t(price: float, t: float, n: float) -> float:
    eps = math.exp(-t)
    inv_h = math.exp(-n)
    if price < 1:
        return (1 - price) + _u_from_t(1.0, t, n)
    log_l = math.log(price)
    if log_l >= n:
        return 0.0
    if t >= n:
        # 1/eps >= H: only the linear branch is reached
        return (1 + eps) * (n - log_l) - math.exp(n - t) + eps * price
    if log_l >= t:
        return 1 / price - inv_h
    return (1 + eps) * (t - log_l) - 1 + eps * price + eps - inv_h


def u0_closed_form(eps: float, n: float) -> float:
    """``2 eps - e^{-n} + (1 + eps) ln(1/eps)``, valid for ``eps >= e^{-n}``."""
    return 2 * eps - math.exp(-n) + (1 + eps) * _log_eps(eps)


def _u0_vec(t: np.ndarray, n: float) -> np.ndarray:
    """``U_eps(0)`` for an array of ``t = ln(1/eps)``."""
    t = np.asarray(t, dtype=float)
    e = np.exp(-t)
    low = 2 * e - math.exp(-n) + (1 + e) * t
    with np.errstate(over="ignore"):
        high = 1 + n + e * (n + 1) - np.exp(np.minimum(n - t, 700.0))
    return np.where(t <= n, low, high)


def alpha_c(c: float) -> float:
    """``e^{1/c - 2}``: the constant in ``p_eps = alpha_c U_eps(0)^{1/c}``."""
    if c <= 1:
        raise DomainError(f"approximation factor must exceed 1, got {c}")
    return math.exp(1 / c - 2)


def _p_from_t(t, c: float, n: float):
    return alpha_c(c) * _u0_vec(t, n) ** (1 / c)


def p_eps(eps: float, c: float, n: float, checked: bool = True) -> float:
    """Stage-one price where a ``w_eps`` buyer's approximation constraint binds.

    Solves ``1 + E[min(v, p)] = E[min(v, U_eps(0))] / c`` for ``v``
    equal-revenue.  The closed form is checked against a root-find of that
    equation, which raises InfeasibleError when no root ``p >= 1`` exists.
    ``checked=False`` returns the closed form ``alpha_c U_eps(0)^{1/c}``
    alone, which :func:`eps_of_p` inverts over all of ``(0, 1]``.
    """
    if not 0 < eps <= 1:
        raise DomainError(f"eps must be in (0, 1], got {eps}")
    if not checked:
        return float(_p_from_t(_log_eps(eps), c, n))
    return _p_checked(_log_eps(eps), c, n)


def _p_checked(t: float, c: float, n: float) -> float:
    u0 = float(_u0_vec(t, n))
    closed = alpha_c(c) * u0 ** (1 / c)
    F1 = equal_revenue()
    rhs = F1.expected_min(u0) / c
    if rhs < 1 + F1.expected_min(1.0):
        raise InfeasibleError(
            f"no stage-one price >= 1 solves the constraint (c={c}, n={n}, t={t})")
    hi = 2.0
    while 1 + F1.expected_min(hi) < rhs:
        hi *= 2
    root = brentq(lambda p: 1 + F1.expected_min(p) - rhs, 1.0, hi, xtol=1e-15, rtol=1e-15)
    if abs(root - closed) > 1e-9 * closed:
        raise ArithmeticError(f"closed form {closed} and root {root} disagree")
    return closed


def p_zero_plus(c: float, n: float) -> float:
    """Supremum of ``p_eps`` as ``eps -> 0``: ``alpha_c (1 + n)^{1/c}``."""
    return alpha_c(c) * (1 + n) ** (1 / c)


def p_zero(c: float, n: float) -> float:
    """``p_0``, taken as ``p_eps`` at ``eps = e^{-n}``."""
    return float(_p_from_t(n, c, n))


def eps_of_p(p: float, c: float, n: float) -> float:
    """Inverse of the closed-form ``p_eps`` (which decreases in ``eps``)."""
    lo, hi = float(_p_from_t(0.0, c, n)), p_zero_plus(c, n)
    if not lo <= p < hi:
        raise OutOfRangeError(f"p={p} outside the attained range [{lo}, {hi})")
    if p == lo:
        return 1.0
    t_hi = 1.0
    while float(_p_from_t(t_hi, c, n)) < p:
        t_hi *= 2
    t = brentq(lambda s: float(_p_from_t(s, c, n)) - p, 0.0, t_hi, xtol=1e-14, rtol=1e-15)
    return math.exp(-t)


# -- the differential equation --------------------------------------------------------


@dataclass(frozen=True)
class LowerBoundConfig:
    """``c``: claimed approximation factor; ``n``: stage-two values capped at ``e^n``.

    ``step`` caps the integrator step.  ``forced_eps`` pins ``eps_p`` to a
    constant (``1`` gives the pure ``x^2`` regime).  With ``p_end`` the
    trajectory continues past ``l_bar = 1`` with slope -1 up to ``p_end``.
    """

    c: float = 2.0
    n: float = 30.0
    step: float = 0.05
    eps_tol: float = 1e-12
    forced_eps: float | None = None
    p_end: float | None = None

    def __post_init__(self):
        if self.c <= 1:
            raise ConfigError(f"c must exceed 1, got {self.c}")
        if self.n < 1:
            raise ConfigError(f"n must be at least 1, got {self.n}")
        if self.step <= 0:
            raise ConfigError(f"step must be positive, got {self.step}")
        if self.forced_eps is not None and not 0 <= self.forced_eps <= 1:
            raise ConfigError(f"forced_eps must be in [0, 1], got {self.forced_eps}")


class EpsSchedule:
    """``eps_p`` interpolated from exact values on a geometric price grid.

    ``ln(1/eps)`` is solved by vectorized bisection at each grid price and
    interpolated monotonically in ``ln p``.  Prices beyond the top of the
    grid, where ``eps < e^{-(n + 40)}``, map to ``eps = 0``.
    """

    def __init__(self, c: float, n: float, p_max: float, points: int = EPS_GRID):
        self.c, self.n = c, n
        self.t_max = n + T_MARGIN
        self.p_lo = float(_p_from_t(0.0, c, n))
        self.p_top = float(_p_from_t(self.t_max, c, n))
        if self.p_top < 1:
            raise InfeasibleError(f"p_eps < 1 for every eps (c={c}, n={n})")
        hi = min(p_max, self.p_top)
        self.grid = np.geomspace(1.0, max(hi, 1.0 + 1e-9), points)
        self.t_grid = self._solve_t(self.grid)
        self._interp = PchipInterpolator(np.log(self.grid), self.t_grid, extrapolate=False)

    def _solve_t(self, ps: np.ndarray) -> np.ndarray:
        lo = np.zeros_like(ps)
        hi = np.full_like(ps, self.t_max)
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            below = _p_from_t(mid, self.c, self.n) < ps
            lo = np.where(below, mid, lo)
            hi = np.where(below, hi, mid)
        return 0.5 * (lo + hi)

    def log_inv_eps(self, p: float) -> float:
        if p >= self.grid[-1]:
            return math.inf if p >= self.p_top else float(self._solve_t(np.array([p]))[0])
        return float(self._interp(math.log(max(p, 1.0))))

    def __call__(self, p: float) -> float:
        return math.exp(-self.log_inv_eps(p))


def _m_slope(m: float, t: float) -> float:
    """``d(1/l_bar)/dp = m^2 / w_eps(m)`` with ``eps = e^{-t}``."""
    if m <= 0:
        return 1.0
    eps = math.exp(-t)
    if m <= eps:
        return 1.0
    return m * m / ((1 + eps) * m - eps)


@dataclass
class OdeTrajectory:
    """Samples of ``l_bar(p)`` from ``p = 1``, with the ``eps_p`` used at each.

    ``s = p - 1`` is stored separately because the interesting crossings
    happen at ``p - 1`` far below double precision near 1.
    """

    s: np.ndarray
    m: np.ndarray
    eps_p: np.ndarray
    n: float
    s_cross_inv_eps_star: float | None
    s_cross_one: float | None
    dense: object = None

    @property
    def p(self) -> np.ndarray:
        return 1.0 + self.s

    @property
    def l_bar(self) -> np.ndarray:
        with np.errstate(divide="ignore"):
            return np.where(self.m > 0, 1.0 / self.m, math.exp(self.n) if self.n < 700 else math.inf)

    @property
    def p_cross_one(self) -> float | None:
        return None if self.s_cross_one is None else 1.0 + self.s_cross_one

    def l_bar_at(self, p: float) -> float:
        """``l_bar(p)``; past the crossing of 1 the slope is -1 until the price hits 0."""
        s = p - 1.0
        if s < 0:
            raise DomainError("the trajectory starts at p = 1")
        if self.s_cross_one is not None and s >= self.s_cross_one:
            return max(1.0 - (s - self.s_cross_one), 0.0)
        if s > self.s[-1] + 1e-12:
            raise DomainError(f"p={p} beyond the integrated range")
        m = float(self.dense(s)[0]) if self.dense is not None else float(np.interp(s, self.s, self.m))
        return 1.0 / m

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["p", "l_bar", "eps_p"])
            for p, lb, e in zip(self.p, self.l_bar, self.eps_p):
                w.writerow([f"{p:.17g}", f"{lb:.17g}", f"{e:.17g}"])


def integrate_ode(cfg: LowerBoundConfig) -> OdeTrajectory:
    """Integrate ``m = 1 / l_bar`` forward from ``m(1) = e^{-n}``.

    ``m' = m^2 / w_{eps_p}(m)``, which equals 1 on the quadratic branch, so
    the start is not stiff in ``m``.  Integration stops when ``l_bar``
    reaches 1, or at ``p_0 + 1`` if it never does.
    """
    c, n = cfg.c, cfg.n
    p0 = p_zero(c, n)
    p_stop = max(p0 + 1.0, cfg.p_end or 0.0)
    if cfg.forced_eps is not None:
        t_forced = _log_eps(cfg.forced_eps)
        t_of = lambda s: t_forced  # noqa: E731
    else:
        sched = EpsSchedule(c, n, p_stop)
        t_of = lambda s: sched.log_inv_eps(1.0 + s)  # noqa: E731
    log_eps_star = -((2 / alpha_c(c)) ** c)
    eps_star = math.exp(log_eps_star)

    def rhs(s, y):
        return [_m_slope(y[0], t_of(s))]

    def hit_one(s, y):
        return y[0] - 1.0
    hit_one.terminal = True
    hit_one.direction = 1

    def hit_eps_star(s, y):
        return y[0] - eps_star
    hit_eps_star.direction = 1

    m0 = math.exp(-n)
    first = min(cfg.step, max(m0, 1e-300))
    try:
        sol = solve_ivp(rhs, (0.0, p_stop - 1.0), [m0], method="RK45", max_step=cfg.step,
                        first_step=first, rtol=1e-11, atol=1e-300, dense_output=True,
                        events=(hit_one, hit_eps_star))
    except (ValueError, FloatingPointError) as exc:
        raise StiffnessError(f"integration failed: {exc}") from exc
    if sol.status == -1:
        raise StiffnessError(f"step control failed: {sol.message}")
    s = np.asarray(sol.t)
    m = np.asarray(sol.y[0])
    cross_one = float(sol.t_events[0][0]) if len(sol.t_events[0]) else None
    if m0 >= eps_star:
        cross_star = 0.0
    else:
        cross_star = float(sol.t_events[1][0]) if len(sol.t_events[1]) else None
    if cross_one is not None and cfg.p_end is not None and cfg.p_end - 1.0 > cross_one:
        # past l_bar = 1 the equation reads l_bar' = -1, down to a zero price
        tail = np.linspace(cross_one, min(cfg.p_end - 1.0, cross_one + 1.0), 65)[1:]
        s = np.concatenate((s, tail))
        with np.errstate(divide="ignore"):
            m = np.concatenate((m, 1.0 / (1.0 - (tail - cross_one))))
    eps = np.array([math.exp(-t_of(si)) for si in s])
    return OdeTrajectory(s, m, eps, n, cross_star, cross_one, sol.sol)


# -- the contradiction ------------------------------------------------------------------


@dataclass(frozen=True)
class ContradictionReport:
    c: float
    n: float
    alpha_c: float
    eps_star: float
    log_eps_star: float
    N: float
    p_eps_star: float
    p_eps_star_at_least_2: bool
    l_bar_at_2: float
    inv_eps_star: float
    p_cross_1: float | None
    p_0: float
    verdict: str

    def to_json(self) -> dict:
        out = asdict(self)
        for k, v in out.items():
            if isinstance(v, float) and not math.isfinite(v):
                out[k] = None if math.isnan(v) else ("inf" if v > 0 else "-inf")
        return out


def check_contradiction(cfg: LowerBoundConfig) -> tuple[ContradictionReport, OdeTrajectory]:
    """Run the construction for ``cfg`` and compare the crossing of 1 with ``p_0``.

    ``CONTRADICTION`` means ``l_bar`` reaches 1 at some ``p < p_0``, where
    it must stay above 1.
    """
    c, n = cfg.c, cfg.n
    a = alpha_c(c)
    big_n = (2 / a) ** c
    t_star = big_n
    p_star = float(_p_from_t(t_star, c, n))
    traj = integrate_ode(cfg)
    p0 = p_zero(c, n)
    try:
        l2 = traj.l_bar_at(2.0)
    except DomainError:
        l2 = math.nan
    cross = traj.p_cross_one
    verdict = "CONTRADICTION" if cross is not None and cross < p0 else "NO-CONTRADICTION"
    report = ContradictionReport(
        c=c, n=n, alpha_c=a, eps_star=math.exp(-t_star), log_eps_star=-t_star, N=big_n,
        p_eps_star=p_star, p_eps_star_at_least_2=p_star >= 2 - 1e-12, l_bar_at_2=l2,
        inv_eps_star=math.exp(t_star) if t_star < 700 else math.inf,
        p_cross_1=cross, p_0=p0, verdict=verdict)
    return report, traj


def min_n_for_contradiction(c: float, n_start: float | None = None, n_max: float = 1e6,
                            step: float = 0.05) -> float | None:
    """Smallest ``n`` (to within 1%) whose run reports ``CONTRADICTION``, or None up to ``n_max``."""
    n = n_start or 2 * (2 / alpha_c(c)) ** c

    def hit(x):
        return check_contradiction(LowerBoundConfig(c=c, n=x, step=step))[0].verdict == "CONTRADICTION"

    if hit(n):
        return n
    lo = n
    while not hit(2 * lo):
        lo *= 2
        if lo > n_max:
            return None
    hi = 2 * lo
    while hi - lo > 0.01 * lo:
        mid = 0.5 * (lo + hi)
        lo, hi = (lo, mid) if hit(mid) else (mid, hi)
    return hi
