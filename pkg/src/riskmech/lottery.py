"""Lotteries, menus and the buyer's best response to a menu."""
from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple, Sequence, Union

import numpy as np

from .errors import DegenerateError, DomainError
from .rae import outcomes, rae_general
from .weighting import WeightingFunction, evaluate

TIE_TOL = 1e-12


@dataclass(frozen=True)
class BinaryLottery:
    """Allocate with probability ``x``; charge ``p`` only when allocating."""

    x: float
    p: float

    def __post_init__(self):
        if not 0 <= self.x <= 1:
            raise DomainError(f"allocation probability {self.x} outside [0, 1]")
        if self.p < 0:
            raise DomainError(f"price {self.p} is negative")

    @property
    def alloc_prob(self):
        return self.x

    @property
    def expected_payment(self):
        return self.x * self.p

    def outcome_pairs(self, v):
        return [(v - self.p, self.x), (0 * v, 1 - self.x)]

    def to_dict(self) -> dict:
        return {"type": "binary", "x": float(self.x), "p": float(self.p)}


@dataclass(frozen=True)
class GeneralLottery:
    """Finitely many ``(allocation, payment, probability)`` branches.

    Kept in normal form: a branch that does not allocate charges nothing.
    """

    branches: tuple[tuple, ...]

    def __post_init__(self):
        total = sum(m for _, _, m in self.branches)
        if abs(total - 1) > 1e-12:
            raise DomainError(f"lottery probabilities sum to {total}, not 1")
        for a, pay, m in self.branches:
            if a not in (0, 1):
                raise DomainError(f"allocation must be 0 or 1, got {a}")
            if pay < 0 or m < 0:
                raise DomainError("payments and probabilities must be nonnegative")
            if a == 0 and pay != 0:
                raise DomainError("branches without allocation must not charge (normal form)")

    @property
    def alloc_prob(self):
        return sum(m for a, _, m in self.branches if a == 1)

    @property
    def expected_payment(self):
        return sum(m * pay for _, pay, m in self.branches)

    def outcome_pairs(self, v):
        return [(v * a - pay, m) for a, pay, m in self.branches]

    def to_dict(self) -> dict:
        return {"type": "general",
                "branches": [[int(a), float(p), float(m)] for a, p, m in self.branches]}


Lottery = Union[BinaryLottery, GeneralLottery]


def general_lottery(branches: Sequence[tuple], canonicalize: bool = False) -> GeneralLottery:
    """Build a :class:`GeneralLottery`, optionally moving no-allocation charges.

    With ``canonicalize`` the expected charge on non-allocating branches is
    spread over the allocating ones (same expected payment, charged only on
    allocation).  Without it, such input is rejected.
    """
    rows = [tuple(b) for b in branches]
    stray = sum(m * pay for a, pay, m in rows if a == 0)
    if stray and canonicalize:
        x = sum(m for a, _, m in rows if a == 1)
        if x <= 0:
            raise DegenerateError("cannot move charges onto allocation: lottery never allocates")
        rows = [(a, pay + stray / x, m) if a == 1 else (a, 0 * pay, m) for a, pay, m in rows]
    return GeneralLottery(tuple(rows))


@dataclass(frozen=True)
class Menu:
    """An ordered set of lotteries; the null option (nothing, pay nothing) is implicit."""

    options: tuple = ()

    def __post_init__(self):
        seen = []
        for opt in self.options:
            if opt in seen:
                raise DomainError(f"duplicate menu option {opt}")
            seen.append(opt)

    def __len__(self):
        return len(self.options)

    def __iter__(self):
        return iter(self.options)

    @property
    def is_binary(self) -> bool:
        return all(isinstance(o, BinaryLottery) for o in self.options)

    def payments(self) -> np.ndarray:
        return np.array([float(o.expected_payment) for o in self.options])

    def to_json(self) -> list:
        return [o.to_dict() for o in self.options]

    @classmethod
    def from_json(cls, items: list) -> "Menu":
        opts = []
        for it in items:
            if it.get("type", "binary") == "binary":
                opts.append(BinaryLottery(it["x"], it["p"]))
            else:
                opts.append(general_lottery(it["branches"]))
        return cls(tuple(opts))


def menu(*options: Lottery) -> Menu:
    """Menu from options, silently dropping exact duplicates."""
    unique = []
    for o in options:
        if o not in unique:
            unique.append(o)
    return Menu(tuple(unique))


# -- utilities -----------------------------------------------------------------


def utility(y: WeightingFunction, v, lottery: Lottery):
    """Risk-averse utility of buyer with value ``v`` for a lottery.

    Binary lotteries with ``v >= p`` use ``y(x) (v - p)`` directly; everything
    else goes through the general risk-averse expectation, so exact inputs
    give exact outputs.
    """
    if isinstance(lottery, BinaryLottery) and v >= lottery.p:
        return evaluate(y, lottery.x) * (v - lottery.p)
    return rae_general(outcomes(lottery.outcome_pairs(v)), y)


def utility_matrix(options: Sequence[Lottery], y: WeightingFunction, vs) -> np.ndarray:
    """Float utilities, shape ``(len(vs), len(options))``."""
    vs = np.asarray(vs, dtype=float)
    out = np.empty((vs.size, len(options)))
    for j, opt in enumerate(options):
        if isinstance(opt, BinaryLottery):
            x, p = float(opt.x), float(opt.p)
            gain = evaluate(y, x) * (vs - p)
            loss = (vs - p) * (1.0 - evaluate(y, 1.0 - x))
            out[:, j] = np.where(vs >= p, gain, loss)
        else:
            out[:, j] = _general_utilities(opt, y, vs)
    return out


def _general_utilities(lot: GeneralLottery, y: WeightingFunction, vs: np.ndarray) -> np.ndarray:
    alloc = np.array([a for a, _, _ in lot.branches], dtype=float)
    pay = np.array([p for _, p, _ in lot.branches], dtype=float)
    prob = np.array([m for _, _, m in lot.branches], dtype=float)
    z = vs[:, None] * alloc[None, :] - pay[None, :]
    order = np.argsort(z, axis=1, kind="stable")
    zs = np.take_along_axis(z, order, axis=1)
    ps = prob[order]
    # survival after the i-th smallest outcome; equal neighbours add zero width
    surv = 1.0 - np.cumsum(ps, axis=1)[:, :-1]
    weights = evaluate(y, np.clip(surv, 0.0, 1.0))
    return zs[:, 0] + np.sum(weights * np.diff(zs, axis=1), axis=1)


# -- buyer choice --------------------------------------------------------------


class Choice(NamedTuple):
    index: int  # -1 is the null option
    option: object
    utility: float


def pick(util: np.ndarray, payments: np.ndarray, tol: float = TIE_TOL) -> np.ndarray:
    """Row-wise best option with ties going to the larger expected payment.

    ``util`` excludes the null option; it is prepended here with utility 0.
    Returns indices into ``options`` with -1 for null.
    """
    full = np.hstack((np.zeros((util.shape[0], 1)), util))
    pays = np.concatenate(([0.0], payments))
    best = full.max(axis=1, keepdims=True)
    tied = full >= best - tol
    return np.argmax(np.where(tied, pays[None, :], -np.inf), axis=1) - 1


def buyer_choice(y: WeightingFunction, v, m: Menu) -> Choice:
    """Utility-maximizing option; near-ties go to the higher expected payment."""
    utils = [0 * v] + [utility(y, v, opt) for opt in m.options]
    pays = [0] + [opt.expected_payment for opt in m.options]
    top = max(utils)
    tied = [i for i, u in enumerate(utils) if u >= top - TIE_TOL]
    i = max(tied, key=lambda k: (pays[k], -k))
    return Choice(i - 1, m.options[i - 1] if i else None, utils[i])


def choice_indices(m: Menu, y: WeightingFunction, vs) -> np.ndarray:
    if len(m) == 0:
        return np.full(np.size(vs), -1)
    return pick(utility_matrix(m.options, y, vs), m.payments())
