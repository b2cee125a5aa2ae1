"""Random instance generators shared by the property and acceptance tests."""
import math

import numpy as np

from riskmech.lottery import BinaryLottery, Menu, general_lottery
from riskmech.twostage import PostedPriceMenu, TwoStageSetting
from riskmech.valuedist import discrete, equal_revenue_bounded, uniform
from riskmech.weighting import power, w_eps


def random_general_menu(rng: np.random.Generator, size: int = 3, top: float = 1.0) -> Menu:
    opts = []
    while len(opts) < size:
        if rng.random() < 0.3:
            opt = BinaryLottery(float(rng.uniform(0.05, 1)), float(rng.uniform(0, top)))
        else:
            k = int(rng.integers(2, 5))
            probs = rng.dirichlet(np.ones(k))
            branches = []
            for m in probs:
                alloc = int(rng.random() < 0.7)
                pay = float(rng.uniform(0, 1.2 * top)) if alloc else 0.0
                branches.append((alloc, pay, float(m)))
            branches[-1] = (branches[-1][0], branches[-1][1], 1.0 - sum(b[2] for b in branches[:-1]))
            opt = general_lottery(branches)
        if opt not in opts:
            opts.append(opt)
    return Menu(tuple(opts))


def random_binary_menu(rng: np.random.Generator, size: int = 3, top: float = 1.0) -> Menu:
    opts = []
    while len(opts) < size:
        opt = BinaryLottery(float(rng.uniform(0.05, 1)), float(rng.uniform(0, top)))
        if opt not in opts:
            opts.append(opt)
    return Menu(tuple(opts))


def random_discrete(rng: np.random.Generator, max_points: int = 5, top: float = 5.0):
    k = int(rng.integers(2, max_points + 1))
    vals = np.sort(rng.choice(np.arange(1, int(4 * top) + 1), size=k, replace=False)) / 4.0
    return discrete(vals.tolist(), rng.dirichlet(np.ones(k)).tolist())


def random_value_law(rng: np.random.Generator):
    kind = rng.integers(3)
    if kind == 0:
        a = float(rng.uniform(0, 1))
        return uniform(a, a + float(rng.uniform(0.5, 3)))
    if kind == 1:
        return random_discrete(rng, 4)
    return equal_revenue_bounded(math.exp(float(rng.uniform(1, 4))))


def random_weighting(rng: np.random.Generator):
    if rng.random() < 0.5:
        return power(int(rng.integers(1, 5)))
    return w_eps(float(rng.uniform(0.02, 1)))


def random_setting(rng: np.random.Generator) -> TwoStageSetting:
    return TwoStageSetting(random_value_law(rng), random_value_law(rng), random_weighting(rng))


def random_posted_menu(rng: np.random.Generator, setting: TwoStageSetting) -> PostedPriceMenu:
    hi1 = setting.F1.grid_upper()
    hi2 = setting.F2.grid_upper()
    k = int(rng.integers(1, 5))
    pairs = [(float(rng.uniform(0, hi1)), float(rng.uniform(0, hi2))) for _ in range(k)]
    outside = float(rng.uniform(0, hi2)) if rng.random() < 0.5 else math.inf
    return PostedPriceMenu.from_pairs(pairs, outside_price=outside)
