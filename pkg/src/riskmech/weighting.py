"""Probability weighting functions and families of them.

A weighting function ``y`` maps an objective probability to the weight a
risk-averse buyer puts on it.  Every function here is convex and
nondecreasing on [0, 1] with ``y(0) = 0`` and ``y(1) = 1``; those are the
only properties the revenue results rely on.

Scalar evaluation keeps the arithmetic of the input, so closed-form kinds
can be fed :class:`fractions.Fraction` values and return exact results.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Iterable, NamedTuple, Sequence

import numpy as np
from scipy.optimize import brentq, minimize_scalar

from .errors import DomainError, NoSolutionError, PreconditionError

SHAPE_GRID = 2**14
_DOMAIN_SLACK = 1e-12

KINDS = ("identity", "power", "w_eps", "extreme", "power_hinge", "tabulated")


@dataclass(frozen=True)
class WeightingFunction:
    """A convex probability distortion.

    ``params`` holds the shape parameters in a fixed order per kind:
    ``power -> (k,)``, ``w_eps -> (eps,)``, ``extreme -> (eps, H)``,
    ``power_hinge -> (k, s)``.
    Tabulated functions keep their knots in ``xs``/``ys`` and are
    interpolated linearly.
    """

    kind: str
    params: tuple[float, ...] = ()
    xs: tuple[float, ...] = field(default=(), repr=False)
    ys: tuple[float, ...] = field(default=(), repr=False)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise DomainError(f"unknown weighting kind {self.kind!r}")

    # -- evaluation -------------------------------------------------------

    def __call__(self, x):
        return evaluate(self, x)

    def inverse(self, w):
        return inverse(self, w)

    @property
    def label(self) -> str:
        if self.kind == "identity":
            return "identity"
        if self.kind == "tabulated":
            return f"tabulated[{len(self.xs)}]"
        return f"{self.kind}({', '.join(f'{p:g}' for p in self.params)})"

    @property
    def kinks(self) -> tuple[float, ...]:
        """Interior probabilities where the closed form switches branch."""
        if self.kind == "w_eps":
            (eps,) = self.params
            return (eps,) if 0.0 < eps < 1.0 else ()
        if self.kind == "extreme":
            return (1.0 - self.params[0],)
        if self.kind == "power_hinge":
            return (_hinge_knee(*self.params),)
        if self.kind == "tabulated":
            return tuple(self.xs[1:-1])
        return ()

    # -- serialization ----------------------------------------------------

    def to_dict(self) -> dict:
        if self.kind == "identity":
            params = {}
        elif self.kind == "power":
            params = {"k": self.params[0]}
        elif self.kind == "w_eps":
            params = {"eps": self.params[0]}
        elif self.kind == "extreme":
            params = {"eps": self.params[0], "H": self.params[1]}
        elif self.kind == "power_hinge":
            params = {"k": self.params[0], "s": self.params[1]}
        else:
            params = {"x": list(self.xs), "y": list(self.ys)}
        return {"kind": self.kind, "params": params}

    @classmethod
    def from_dict(cls, spec: dict) -> "WeightingFunction":
        kind = spec.get("kind")
        p = spec.get("params", {}) or {}
        try:
            if kind == "identity":
                return identity()
            if kind == "power":
                return power(p["k"])
            if kind == "w_eps":
                return w_eps(p["eps"])
            if kind == "extreme":
                return extreme(p["eps"], p["H"])
            if kind == "power_hinge":
                return power_hinge(p["k"], p["s"])
            if kind == "tabulated":
                return tabulated(p["x"], p["y"])
        except KeyError as exc:
            raise DomainError(f"weighting {kind!r} is missing parameter {exc}") from None
        raise DomainError(f"unknown weighting kind {kind!r}")


# -- constructors ------------------------------------------------------------


def identity() -> WeightingFunction:
    return WeightingFunction("identity")


def power(k: float) -> WeightingFunction:
    if k < 1:
        raise DomainError(f"power weighting needs k >= 1 to be convex, got {k}")
    k = int(k) if float(k).is_integer() else float(k)
    return WeightingFunction("power", (k,))


def w_eps(eps: float) -> WeightingFunction:
    """``x**2`` below ``eps``, then the line ``(1+eps) x - eps`` up to (1, 1)."""
    if not 0.0 <= eps <= 1.0:
        raise DomainError(f"w_eps needs eps in [0, 1], got {eps}")
    return WeightingFunction("w_eps", (float(eps),))


def extreme(eps: float, H: float) -> WeightingFunction:
    """Extremely risk-averse weighting with ``y(1 - eps) = 2**(-H/eps)``.

    Linear with a tiny slope up to ``1 - eps``, then linear up to (1, 1).
    """
    if not 0.0 < eps < 1.0:
        raise DomainError(f"extreme weighting needs 0 < eps < 1, got {eps}")
    if H <= 0:
        raise DomainError(f"extreme weighting needs H > 0, got {H}")
    return WeightingFunction("extreme", (float(eps), float(H)))


def power_hinge(k: float, s: float) -> WeightingFunction:
    """``max(x**k, s*x - (s - 1))``: a power curve with a steeper line through (1, 1).

    ``power_hinge(2, 1.5)`` is ordered above ``power(2)`` pointwise, yet the
    ratio of the two is not monotone.
    """
    if k <= 1 or s <= 1 or s >= k:
        raise DomainError(f"power_hinge needs 1 < s < k, got k={k}, s={s}")
    k = int(k) if float(k).is_integer() else float(k)
    return WeightingFunction("power_hinge", (k, float(s)))


def _hinge_knee(k: float, s: float) -> float:
    """Interior crossing of ``x**k`` and ``s*x - (s - 1)``."""
    gap = lambda x: x**k - s * x + (s - 1)
    # the line lies above the power curve just left of 1 since s < k
    return brentq(gap, 0.0, 1.0 - 1e-9 * (k - s), xtol=1e-15) if gap(0.0) > 0 else 0.0


def tabulated(x: Sequence[float], y: Sequence[float]) -> WeightingFunction:
    """Piecewise-linear weighting through the points ``(x[i], y[i])``.

    The table must start at (0, 0), end at (1, 1), and be nondecreasing and
    convex; anything else is rejected.
    """
    xs = np.asarray(x, dtype=float)
    ys = np.asarray(y, dtype=float)
    if xs.ndim != 1 or xs.shape != ys.shape or xs.size < 2:
        raise DomainError("tabulated weighting needs equal-length 1-d arrays with >= 2 points")
    if abs(xs[0]) > 1e-12 or abs(xs[-1] - 1) > 1e-12:
        raise DomainError("tabulated weighting must span x in [0, 1]")
    if abs(ys[0]) > 1e-12 or abs(ys[-1] - 1) > 1e-12:
        raise DomainError("tabulated weighting must satisfy y(0)=0 and y(1)=1")
    dx = np.diff(xs)
    if np.any(dx <= 0):
        raise DomainError("tabulated x must be strictly increasing")
    slopes = np.diff(ys) / dx
    if np.any(slopes < -1e-12):
        raise DomainError("tabulated weighting must be nondecreasing")
    if np.any(np.diff(slopes) < -1e-10):
        raise DomainError("tabulated weighting must be convex")
    xs[0], xs[-1], ys[0], ys[-1] = 0.0, 1.0, 0.0, 1.0
    return WeightingFunction("tabulated", (), tuple(xs.tolist()), tuple(ys.tolist()))


# -- evaluation ----------------------------------------------------------------


def _check_prob(x):
    if isinstance(x, np.ndarray):
        if x.size and (np.nanmin(x) < -_DOMAIN_SLACK or np.nanmax(x) > 1 + _DOMAIN_SLACK):
            raise DomainError("probability outside [0, 1]")
        return np.clip(x, 0.0, 1.0)
    if x < -_DOMAIN_SLACK or x > 1 + _DOMAIN_SLACK:
        raise DomainError(f"probability {x} outside [0, 1]")
    if x < 0:
        return 0 * x
    if x > 1:
        return x / x
    return x


def evaluate(y: WeightingFunction, x):
    """Return ``y(x)``; ``x`` may be a scalar (float or Fraction) or an array."""
    x = _check_prob(x)
    kind = y.kind
    if isinstance(x, np.ndarray):
        if kind == "identity":
            return x.astype(float, copy=True)
        if kind == "power":
            return x ** y.params[0]
        if kind == "w_eps":
            eps = y.params[0]
            return np.where(x <= eps, x * x, (1 + eps) * x - eps)
        if kind == "extreme":
            eps, H = y.params
            a = 2.0 ** (-H / eps)
            knee = 1.0 - eps
            return np.where(x <= knee, a * x / knee, a + (x - knee) * (1 - a) / eps)
        if kind == "power_hinge":
            k, s = y.params
            return np.maximum(x**k, s * x - (s - 1))
        return np.interp(x, y.xs, y.ys)
    if kind == "identity":
        return x
    if kind == "power":
        return x ** y.params[0]
    if kind == "w_eps":
        eps = y.params[0]
        return x * x if x <= eps else (1 + eps) * x - eps
    if kind == "extreme":
        eps, H = y.params
        a = 2.0 ** (-H / eps)
        knee = 1.0 - eps
        return a * x / knee if x <= knee else a + (x - knee) * (1 - a) / eps
    if kind == "power_hinge":
        k, s = y.params
        return max(x**k, s * x - (s - 1))
    return float(np.interp(float(x), y.xs, y.ys))


def inverse(y: WeightingFunction, w):
    """Smallest ``x`` in [0, 1] with ``y(x) = w``."""
    if w < -_DOMAIN_SLACK or w > 1 + _DOMAIN_SLACK:
        raise NoSolutionError(f"weight {w} outside the range [0, 1] of y")
    w = min(max(w, 0 * w), 1 + 0 * w)
    kind = y.kind
    if kind == "identity":
        return w
    if kind == "power":
        k = y.params[0]
        return w ** (1.0 / k) if w > 0 else 0 * w
    if kind == "w_eps":
        eps = y.params[0]
        if w <= eps * eps:
            return math.sqrt(w)
        return (w + eps) / (1 + eps)
    if kind == "extreme":
        eps, H = y.params
        a = 2.0 ** (-H / eps)
        knee = 1.0 - eps
        if w <= a:
            return w * knee / a
        return knee + (w - a) * eps / (1 - a)
    if kind == "power_hinge":
        k, s = y.params
        return min(w ** (1.0 / k) if w > 0 else 0 * w, (w + s - 1) / s)
    return _bisect_inverse(y, float(w))


def _bisect_inverse(y: WeightingFunction, w: float, tol: float = 1e-13) -> float:
    lo, hi = 0.0, 1.0
    if evaluate(y, 0.0) >= w:
        return 0.0
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if evaluate(y, mid) >= w:
            hi = mid
        else:
            lo = mid
    return hi


# -- shape diagnostics -------------------------------------------------------


class Check(NamedTuple):
    """Outcome of a structural check; ``witness`` locates a failure."""

    ok: bool
    witness: object = None

    def __bool__(self):
        return self.ok


def shape_violations(y: WeightingFunction, n: int = SHAPE_GRID) -> list[str]:
    """List the weighting-function axioms that fail on an n-point grid."""
    x = np.linspace(0.0, 1.0, n + 1)
    v = evaluate(y, x)
    problems = []
    if abs(v[0]) > 1e-12 or abs(v[-1] - 1) > 1e-12:
        problems.append("endpoints")
    if np.any(np.diff(v) < -1e-12):
        problems.append("nondecreasing")
    # nonnegative second differences on a uniform grid give midpoint
    # convexity for every grid pair with an integer midpoint
    if np.any(v[:-2] + v[2:] - 2 * v[1:-1] < -1e-10):
        problems.append("convex")
    if np.any(v > x + 1e-12):
        problems.append("below-diagonal")
    return problems


def beta_boundedness(y: WeightingFunction, n: int = SHAPE_GRID) -> tuple[float, float]:
    """Largest rectangle ``y(x) (1 - x)`` under the curve and its location."""
    x = np.linspace(0.0, 1.0, n + 1)
    area = evaluate(y, x) * (1 - x)
    i = int(np.argmax(area))
    best_x, best = float(x[i]), float(area[i])
    lo, hi = x[max(i - 1, 0)], x[min(i + 1, n)]
    res = minimize_scalar(lambda t: -evaluate(y, t) * (1 - t), bounds=(lo, hi),
                          method="bounded", options={"xatol": 1e-12})
    if res.success and -res.fun > best:
        best, best_x = float(-res.fun), float(res.x)
    return best, best_x


# -- families ------------------------------------------------------------------


@dataclass(frozen=True)
class WeightingFamily:
    """An ordered collection of weighting functions.

    ``params`` optionally records the parameter that generated each member
    (the eps grid for the ``w_eps`` family, exponents for powers).
    """

    members: tuple[WeightingFunction, ...]
    params: tuple[float, ...] | None = None
    name: str = ""

    def __post_init__(self):
        if self.params is not None and len(self.params) != len(self.members):
            raise DomainError("family params must align with members")

    def __len__(self):
        return len(self.members)

    def __iter__(self):
        return iter(self.members)


def w_eps_family(eps_grid: Iterable[float]) -> WeightingFamily:
    eps = tuple(float(e) for e in eps_grid)
    return WeightingFamily(tuple(w_eps(e) for e in eps), eps, "w_eps")


def power_family(exponents: Iterable[float]) -> WeightingFamily:
    ks = tuple(exponents)
    return WeightingFamily(tuple(power(k) for k in ks), tuple(float(k) for k in ks), "power")


def dominates(y1: WeightingFunction, y2: WeightingFunction, n: int = SHAPE_GRID,
              tol: float = 1e-12) -> bool:
    """True when ``y1 >= y2`` pointwise on the grid."""
    x = np.linspace(0.0, 1.0, n + 1)
    return bool(np.all(evaluate(y1, x) >= evaluate(y2, x) - tol))


def family_is_non_crossing(family: WeightingFamily, grid: int = SHAPE_GRID,
                           tol: float = 1e-12) -> Check:
    """Every pair is ordered pointwise; the witness is ``(i, j, x_above, x_below)``."""
    if len(family) < 2:
        raise DomainError("non-crossing check needs at least two members")
    x = np.linspace(0.0, 1.0, grid + 1)
    vals = [evaluate(y, x) for y in family]
    for i, j in itertools.combinations(range(len(vals)), 2):
        d = vals[i] - vals[j]
        if d.max() > tol and d.min() < -tol:
            return Check(False, (i, j, float(x[d.argmax()]), float(x[d.argmin()])))
    return Check(True)


def family_is_monotone(family: WeightingFamily, grid: int = SHAPE_GRID,
                       tol: float = 1e-10) -> Check:
    """For every ordered pair ``y1 >= y2`` the ratio ``y2/y1`` is nondecreasing.

    Points where ``y1 <= 1e-14`` are skipped.  The witness is ``(i, j, x)``
    with ``i`` the dominating member and ``x`` where the ratio drops.
    """
    if not family_is_non_crossing(family, grid):
        raise PreconditionError("monotonicity is only defined for non-crossing families")
    x = np.linspace(0.0, 1.0, grid + 1)
    vals = [evaluate(y, x) for y in family]
    for i, j in itertools.combinations(range(len(vals)), 2):
        hi, lo = (i, j) if np.sum(vals[i] - vals[j]) >= 0 else (j, i)
        keep = vals[hi] > 1e-14
        ratio = vals[lo][keep] / vals[hi][keep]
        drops = np.diff(ratio) < -tol * np.maximum(1.0, np.abs(ratio[:-1]))
        if np.any(drops):
            k = int(np.argmax(drops))
            return Check(False, (hi, lo, float(x[keep][k + 1])))
    return Check(True)
