"""One-dimensional value distributions and the functionals used on them.

Conventions: ``cdf`` is right-continuous, ``sf_ge(v) = P[V >= v]`` includes
an atom at ``v`` (a buyer facing a posted price equal to his value buys),
and the Myerson revenue uses ``p * P[V >= p]``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy.integrate import quad
from scipy.optimize import minimize_scalar

from .errors import DomainError

MYERSON_GRID = 2**12
TAIL_QUANTILE = 1.0 - 1e-10
QUAD_OPTS = dict(epsabs=1e-11, epsrel=1e-10, limit=400)

KINDS = ("uniform", "point_mass", "discrete", "equal_revenue_bounded",
         "equal_revenue", "tabulated")


@dataclass(frozen=True)
class ValueDistribution:
    """A value law on [0, inf).

    ``params`` per kind: ``uniform -> (a, b)``, ``point_mass -> (v,)``,
    ``equal_revenue_bounded -> (H,)``.  Discrete laws keep support and
    masses in ``values``/``probs``; a tabulated CDF keeps its knots there
    (``probs`` then holds F at each knot).
    """

    kind: str
    params: tuple[float, ...] = ()
    values: tuple[float, ...] = ()
    probs: tuple[float, ...] = ()

    def __post_init__(self):
        if self.kind not in KINDS:
            raise DomainError(f"unknown distribution kind {self.kind!r}")

    # -- structure ----------------------------------------------------------

    @property
    def label(self) -> str:
        if self.kind in ("discrete", "tabulated"):
            return f"{self.kind}[{len(self.values)}]"
        if self.kind == "equal_revenue":
            return "equal_revenue"
        return f"{self.kind}({', '.join(f'{p:g}' for p in self.params)})"

    @property
    def support(self) -> tuple[float, float]:
        k = self.kind
        if k == "uniform":
            return self.params
        if k == "point_mass":
            return (self.params[0], self.params[0])
        if k == "discrete":
            return (self.values[0], self.values[-1])
        if k == "equal_revenue_bounded":
            return (1.0, self.params[0])
        if k == "equal_revenue":
            return (1.0, math.inf)
        return (self.values[0], self.values[-1])

    @property
    def is_discrete(self) -> bool:
        return self.kind in ("point_mass", "discrete")

    @property
    def is_bounded(self) -> bool:
        return math.isfinite(self.support[1])

    def atoms(self) -> tuple[tuple[float, float], ...]:
        k = self.kind
        if k == "point_mass":
            return ((self.params[0], 1.0),)
        if k == "discrete":
            return tuple(zip(self.values, self.probs))
        if k == "equal_revenue_bounded":
            H = self.params[0]
            return ((H, 1.0 / H),)
        if k == "tabulated" and self.probs[0] > 0:
            return ((self.values[0], self.probs[0]),)
        return ()

    def knots(self) -> tuple[float, ...]:
        """Points where the CDF has a kink or jump."""
        lo, hi = self.support
        pts = {lo}
        if math.isfinite(hi):
            pts.add(hi)
        pts.update(v for v, _ in self.atoms())
        if self.kind == "tabulated":
            pts.update(self.values)
        return tuple(sorted(pts))

    def grid_upper(self) -> float:
        """Top of the support, or the 1 - 1e-10 quantile when unbounded."""
        hi = self.support[1]
        return hi if math.isfinite(hi) else self.quantile(TAIL_QUANTILE)

    # -- distribution functions ----------------------------------------------

    def cdf(self, v):
        """Right-continuous CDF ``P[V <= v]``."""
        return self._cdf(v, left=False)

    def cdf_left(self, v):
        """Left limit ``P[V < v]``."""
        return self._cdf(v, left=True)

    def sf_ge(self, v):
        """``P[V >= v]``."""
        return 1.0 - self.cdf_left(v)

    def _cdf(self, v, left: bool):
        arr = np.asarray(v, dtype=float)
        k = self.kind
        if k == "uniform":
            a, b = self.params
            out = np.clip((arr - a) / (b - a), 0.0, 1.0)
        elif k in ("point_mass", "discrete"):
            vals = np.array(self.values if k == "discrete" else self.params)
            cum = np.concatenate(([0.0], np.cumsum(self.probs if k == "discrete" else (1.0,))))
            idx = np.searchsorted(vals, arr, side="left" if left else "right")
            out = np.minimum(cum[idx], 1.0)
        elif k in ("equal_revenue", "equal_revenue_bounded"):
            with np.errstate(divide="ignore"):
                out = np.where(arr < 1.0, 0.0, 1.0 - 1.0 / np.maximum(arr, 1.0))
            if k == "equal_revenue_bounded":
                H = self.params[0]
                top = (arr > H) if left else (arr >= H)
                out = np.where(top, 1.0, np.where(arr >= H, 1.0 - 1.0 / H, out))
        else:
            xs, Fs = np.array(self.values), np.array(self.probs)
            out = np.interp(arr, xs, Fs, left=0.0, right=1.0)
            if left:
                out = np.where(arr <= xs[0], 0.0, out)
        return float(out) if np.ndim(out) == 0 else out

    def cont_cdf(self, v) -> float:
        """CDF of the absolutely continuous part only."""
        jump = sum(m for a, m in self.atoms() if a <= v)
        return float(self.cdf(v)) - jump

    def pdf(self, v) -> float:
        """Density of the continuous part (zero for discrete kinds)."""
        k = self.kind
        if k == "uniform":
            a, b = self.params
            return 1.0 / (b - a) if a <= v <= b else 0.0
        if k in ("equal_revenue", "equal_revenue_bounded"):
            top = self.params[0] if k == "equal_revenue_bounded" else math.inf
            return 1.0 / (v * v) if 1.0 <= v < top else 0.0
        if k == "tabulated":
            xs, Fs = self.values, self.probs
            if v < xs[0] or v >= xs[-1]:
                return 0.0
            i = int(np.searchsorted(xs, v, side="right")) - 1
            return (Fs[i + 1] - Fs[i]) / (xs[i + 1] - xs[i])
        return 0.0

    def quantile(self, q: float) -> float:
        """``inf {v : F(v) >= q}``."""
        if not 0.0 <= q <= 1.0:
            raise DomainError(f"quantile level {q} outside [0, 1]")
        k = self.kind
        if k == "uniform":
            a, b = self.params
            return a + q * (b - a)
        if k in ("point_mass", "discrete"):
            vals = self.values if k == "discrete" else self.params
            cum = np.cumsum(self.probs if k == "discrete" else (1.0,))
            i = int(np.searchsorted(cum, q - 1e-15, side="left"))
            return float(vals[min(i, len(vals) - 1)])
        if k == "equal_revenue":
            return math.inf if q >= 1.0 else 1.0 / (1.0 - q)
        if k == "equal_revenue_bounded":
            H = self.params[0]
            return H if q >= 1.0 - 1.0 / H else 1.0 / (1.0 - q)
        xs, Fs = self.values, self.probs
        if q <= Fs[0]:
            return xs[0]
        i = int(np.searchsorted(Fs, q, side="left"))
        i = min(max(i, 1), len(xs) - 1)
        return xs[i - 1] + (q - Fs[i - 1]) * (xs[i] - xs[i - 1]) / (Fs[i] - Fs[i - 1])

    # -- functionals ----------------------------------------------------------

    def expected_min(self, cap: float) -> float:
        """``E[min(V, cap)] = integral_0^cap (1 - F(z)) dz``."""
        if cap < 0:
            raise DomainError(f"cap must be >= 0, got {cap}")
        k = self.kind
        if k == "uniform":
            a, b = self.params
            if cap <= a:
                return cap
            c = min(cap, b)
            return a + ((b - a) ** 2 - (b - c) ** 2) / (2 * (b - a))
        if k in ("point_mass", "discrete"):
            return float(sum(m * min(v, cap) for v, m in self.atoms()))
        if k in ("equal_revenue", "equal_revenue_bounded"):
            if cap <= 1.0:
                return cap
            top = cap if k == "equal_revenue" else min(cap, self.params[0])
            return 1.0 + math.log(top)
        xs, Fs = np.array(self.values), np.array(self.probs)
        if cap <= xs[0]:
            return cap
        c = min(cap, xs[-1])
        pts = np.concatenate((xs[xs < c], [c]))
        sf = 1.0 - np.interp(pts, xs, Fs)
        return float(xs[0] + np.sum(0.5 * (sf[1:] + sf[:-1]) * np.diff(pts)))

    def expectation(self) -> float:
        """Mean value; ``math.inf`` for the unbounded equal-revenue law."""
        if self.kind == "equal_revenue":
            return math.inf
        return self.expected_min(self.support[1])

    def expect(self, g: Callable[[float], float], lo: float = -math.inf,
               hi: float = math.inf) -> float:
        """``E[g(V); lo <= V < hi]`` via atoms plus adaptive quadrature."""
        total = sum(m * g(v) for v, m in self.atoms() if lo <= v < hi)
        if self.is_discrete:
            return float(total)
        s_lo, s_hi = self.support
        a, b = max(lo, s_lo), min(hi, s_hi)
        if not a < b:
            return float(total)
        if math.isinf(b):
            # v = 1/u maps the 1/v^2 tail onto (0, 1/a]
            val, _ = quad(lambda u: g(1.0 / u), 0.0, 1.0 / a, **QUAD_OPTS)
            return float(total + val)
        pts = [p for p in self.knots() if a < p < b]
        val, _ = quad(lambda v: g(v) * self.pdf(v), a, b, points=pts or None, **QUAD_OPTS)
        return float(total + val)

    def myerson(self) -> tuple[float, float]:
        """Revenue-maximizing posted price and its revenue ``p * P[V >= p]``.

        Ties go to the smallest price.  On equal-revenue laws every price in
        the support earns 1, so the price returned is 1.
        """
        if self.kind in ("equal_revenue", "equal_revenue_bounded"):
            return 1.0, 1.0
        atoms = [v for v, _ in self.atoms()]
        if self.is_discrete:
            cands = np.array(atoms)
        else:
            lo, hi = self.support
            cands = np.union1d(np.linspace(lo, hi, MYERSON_GRID + 1), atoms)
        rev = cands * self.sf_ge(cands)
        best = rev.max()
        i = int(np.flatnonzero(rev >= best - 1e-12 * max(1.0, best))[0])
        price, revenue = float(cands[i]), float(rev[i])
        if not self.is_discrete:
            lo = cands[max(i - 1, 0)]
            hi = cands[min(i + 1, len(cands) - 1)]
            if hi > lo:
                res = minimize_scalar(lambda p: -p * self.sf_ge(p), bounds=(lo, hi),
                                      method="bounded", options={"xatol": 1e-12})
                if res.success and -res.fun > revenue + 1e-13:
                    price, revenue = float(res.x), float(-res.fun)
        return price, revenue

    # -- serialization ----------------------------------------------------------

    def to_dict(self) -> dict:
        k = self.kind
        if k == "uniform":
            params = {"a": self.params[0], "b": self.params[1]}
        elif k == "point_mass":
            params = {"v": self.params[0]}
        elif k == "discrete":
            params = {"values": list(self.values), "probs": list(self.probs)}
        elif k == "equal_revenue_bounded":
            params = {"H": self.params[0]}
        elif k == "equal_revenue":
            params = {}
        else:
            params = {"v": list(self.values), "F": list(self.probs)}
        return {"kind": k, "params": params}

    @classmethod
    def from_dict(cls, spec: dict) -> "ValueDistribution":
        kind = spec.get("kind")
        p = spec.get("params", {}) or {}
        try:
            if kind == "uniform":
                return uniform(p.get("a", 0.0), p.get("b", 1.0))
            if kind == "point_mass":
                return point_mass(p["v"])
            if kind == "discrete":
                return discrete(p["values"], p["probs"])
            if kind == "equal_revenue_bounded":
                H = p["H"] if "H" in p else math.exp(p["n"])
                return equal_revenue_bounded(H)
            if kind == "equal_revenue":
                return equal_revenue()
            if kind == "tabulated":
                return tabulated(p["v"], p["F"])
        except KeyError as exc:
            raise DomainError(f"distribution {kind!r} is missing parameter {exc}") from None
        raise DomainError(f"unknown distribution kind {kind!r}")


# -- constructors --------------------------------------------------------------


def uniform(a: float = 0.0, b: float = 1.0) -> ValueDistribution:
    if not 0.0 <= a < b:
        raise DomainError(f"uniform needs 0 <= a < b, got ({a}, {b})")
    return ValueDistribution("uniform", (float(a), float(b)))


def point_mass(v: float) -> ValueDistribution:
    if v < 0:
        raise DomainError(f"values must be nonnegative, got {v}")
    return ValueDistribution("point_mass", (float(v),))


def discrete(values: Sequence[float], probs: Sequence[float]) -> ValueDistribution:
    """Finite law; repeated values are merged and the support is sorted."""
    vals = np.asarray(values, dtype=float)
    ps = np.asarray(probs, dtype=float)
    if vals.shape != ps.shape or vals.ndim != 1 or vals.size == 0:
        raise DomainError("discrete needs equal-length nonempty values/probs")
    if np.any(vals < 0) or np.any(ps < 0):
        raise DomainError("discrete values and probabilities must be nonnegative")
    if abs(ps.sum() - 1.0) > 1e-12:
        raise DomainError(f"discrete probabilities sum to {ps.sum()}, not 1")
    uniq, inv = np.unique(vals, return_inverse=True)
    merged = np.bincount(inv, weights=ps)
    keep = merged > 0
    return ValueDistribution("discrete", (), tuple(uniq[keep].tolist()),
                             tuple(merged[keep].tolist()))


def equal_revenue_bounded(H: float) -> ValueDistribution:
    """``F(v) = 1 - 1/v`` on [1, H) with the remaining mass 1/H as an atom at H."""
    if H <= 1:
        raise DomainError(f"equal-revenue bound must exceed 1, got {H}")
    return ValueDistribution("equal_revenue_bounded", (float(H),))


def equal_revenue() -> ValueDistribution:
    """``F(v) = 1 - 1/v`` on [1, inf); the mean is infinite."""
    return ValueDistribution("equal_revenue")


def tabulated(v: Sequence[float], F: Sequence[float]) -> ValueDistribution:
    """Piecewise-linear CDF through ``(v[i], F[i])``; ``F[0] > 0`` is an atom at ``v[0]``."""
    xs = np.asarray(v, dtype=float)
    Fs = np.asarray(F, dtype=float)
    if xs.shape != Fs.shape or xs.ndim != 1 or xs.size < 2:
        raise DomainError("tabulated CDF needs equal-length arrays with >= 2 points")
    if xs[0] < 0 or np.any(np.diff(xs) <= 0):
        raise DomainError("tabulated CDF knots must be nonnegative and increasing")
    if np.any(np.diff(Fs) < 0) or Fs[0] < 0 or abs(Fs[-1] - 1.0) > 1e-12:
        raise DomainError("tabulated CDF must be nondecreasing and end at 1")
    Fs[-1] = 1.0
    return ValueDistribution("tabulated", (), tuple(xs.tolist()), tuple(Fs.tolist()))
