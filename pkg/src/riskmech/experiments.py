"""Experiment runners: each takes a parameter dict and returns metrics, contracts and artifacts.

Nothing is written to disk here; :mod:`riskmech.cli` writes the artifacts
only after an experiment has finished, so a failed run leaves no files.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable

import numpy as np

from . import lowerbound as lb
from .errors import ConfigError
from .lottery import BinaryLottery, Menu, general_lottery
from .oracle import OracleBudget, brute_force_opt, monotonicity_counterexample, rae_oracle
from .rae import outcomes, rae_general
from .robust import bound_lemma_checks, loglog_mechanism
from .singleshot import (binarize, choice_boundaries, lower_convex_envelope, revenue,
                         utility_curve, welfare_extraction_bound, welfare_extraction_menu)
from .twostage import (CompositeOption, PostedPriceMenu, TwoStageSetting, best_two_stage,
                       choice_rows, composite_option_utility, revenue_two_stage,
                       second_stage_utility, upper_bound)
from .valuedist import ValueDistribution, uniform
from .weighting import WeightingFamily, WeightingFunction, beta_boundedness, extreme


@dataclass
class Contract:
    name: str
    lhs: float
    rhs: float
    passed: bool

    def to_json(self) -> dict:
        return {"name": self.name, "lhs": jsonable(self.lhs), "rhs": jsonable(self.rhs),
                "pass": bool(self.passed)}


def at_least(name: str, lhs: float, rhs: float, tol: float = 0.0) -> Contract:
    return Contract(name, float(lhs), float(rhs), float(lhs) >= float(rhs) - tol)


def close_to(name: str, lhs: float, rhs: float, tol: float) -> Contract:
    return Contract(name, float(lhs), float(rhs), abs(float(lhs) - float(rhs)) <= tol)


@dataclass
class Outcome:
    """Result of one experiment run; ``tables`` are CSV (header, rows), ``documents`` JSON."""

    metrics: dict
    contracts: list[Contract] = field(default_factory=list)
    tables: dict[str, tuple[list[str], list]] = field(default_factory=dict)
    documents: dict[str, object] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.contracts)


def jsonable(x):
    if isinstance(x, Fraction):
        return str(x)
    if isinstance(x, (np.floating, np.integer)):
        x = x.item()
    if isinstance(x, float) and not math.isfinite(x):
        return None if math.isnan(x) else ("inf" if x > 0 else "-inf")
    if isinstance(x, dict):
        return {k: jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [jsonable(v) for v in x]
    return x


# -- parameter parsing ---------------------------------------------------------------


def _need(params: dict, key: str):
    if key not in params:
        raise ConfigError(f"missing parameter {key!r}")
    return params[key]


def _number(x):
    """Numbers may be given as JSON numbers or as exact strings like ``"3/8"``."""
    if isinstance(x, str):
        try:
            return Fraction(x)
        except ValueError:
            raise ConfigError(f"cannot parse number {x!r}") from None
    if isinstance(x, bool) or not isinstance(x, (int, float)):
        raise ConfigError(f"expected a number, got {x!r}")
    return x


def _weighting(spec) -> WeightingFunction:
    if not isinstance(spec, dict):
        raise ConfigError(f"weighting spec must be an object, got {spec!r}")
    return WeightingFunction.from_dict(spec)


def _dist(spec) -> ValueDistribution:
    if not isinstance(spec, dict):
        raise ConfigError(f"distribution spec must be an object, got {spec!r}")
    return ValueDistribution.from_dict(spec)


def _menu(items) -> Menu:
    if not isinstance(items, list):
        raise ConfigError("menu must be a list of options")
    opts = []
    for it in items:
        if it.get("type", "binary") == "binary":
            opts.append(BinaryLottery(_number(_need(it, "x")), _number(_need(it, "p"))))
        else:
            branches = [(int(a), _number(p), _number(m)) for a, p, m in _need(it, "branches")]
            opts.append(general_lottery(branches, canonicalize=bool(it.get("canonicalize"))))
    return Menu(tuple(opts))


def _budget(spec: dict | None) -> OracleBudget:
    spec = spec or {}
    return OracleBudget(x_grid=int(spec.get("x_grid", 21)), k=spec.get("k"),
                        refine_sweeps=int(spec.get("refine_sweeps", 4)),
                        time_limit_s=float(spec.get("time_limit_s", 60.0)))


# -- experiments ---------------------------------------------------------------------


def run_rae(params: dict) -> Outcome:
    pairs = [(_number(v), _number(m)) for v, m in _need(params, "outcomes")]
    y = _weighting(_need(params, "weighting"))
    value = rae_general(outcomes(pairs), y)
    check = rae_oracle(pairs, y)
    metrics = {"rae": float(value), "rae_exact": str(value) if isinstance(value, Fraction) else None,
               "oracle": float(check)}
    contracts = [close_to("rae_general == rae_oracle", value, check, 1e-12)]
    if "expected" in params:
        contracts.append(close_to("rae == expected", value, _number(params["expected"]), 1e-12))
    return Outcome(metrics, contracts)


def run_single_shot(params: dict) -> Outcome:
    m = _menu(_need(params, "menu"))
    y = _weighting(_need(params, "weighting"))
    F = _dist(_need(params, "dist"))
    grid = int(params.get("grid", 1025))
    rev = revenue(m, y, F)
    lo, hi = F.support[0], F.grid_upper()
    bounds = choice_boundaries(m, y, lo, hi)
    curve = utility_curve(m, y, lo, hi, grid)
    metrics = {"revenue": rev,
               "boundaries": [{"v": b.v, "from": b.before, "to": b.after} for b in bounds]}
    contracts = []
    if "expected_revenue" in params:
        contracts.append(close_to("revenue == expected", rev, _number(params["expected_revenue"]),
                                  float(params.get("tol", 1e-9))))
    return Outcome(metrics, contracts,
                   tables={"choices.csv": (["v", "utility", "chosen", "expected_payment"],
                                           curve.rows())})


def run_envelope(params: dict) -> Outcome:
    m = _menu(_need(params, "menu"))
    y = _weighting(_need(params, "weighting"))
    F = _dist(_need(params, "dist"))
    grid = int(params.get("grid", 4097))
    lo, hi = F.support[0], F.grid_upper()
    curve = utility_curve(m, y, lo, hi, grid)
    env = lower_convex_envelope(curve)
    binary = binarize(m, y, F)
    before, after = revenue(m, y, F), revenue(binary, y, F)
    rows = list(zip(curve.v.tolist(), curve.u.tolist(), env.u.tolist(), env.slopes.tolist()))
    metrics = {"revenue": before, "binarized_revenue": after,
               "slope_min": float(env.slopes.min()), "slope_max": float(env.slopes.max())}
    contracts = [at_least("binarized revenue >= revenue - 1e-4", after, before, 1e-4),
                 at_least("envelope slopes >= 0", env.slopes.min(), 0.0, 1e-12),
                 at_least("envelope slopes <= 1", 1.0 + 1e-9, env.slopes.max())]
    return Outcome(metrics, contracts,
                   tables={"envelope.csv": (["v", "utility", "envelope", "slope"], rows)},
                   documents={"binarized_menu.json": binary.to_json()})


def run_welfare_extract(params: dict) -> Outcome:
    eps, H = float(_need(params, "eps")), float(_need(params, "H"))
    y = _weighting(params["weighting"]) if "weighting" in params else extreme(eps, H)
    F = _dist(params["dist"]) if "dist" in params else uniform(1.0, H)
    target = float(params.get("target_fraction", 0.70))
    m = welfare_extraction_menu(eps, H, y)
    rev = revenue(m, y, F)
    bound = welfare_extraction_bound(eps, H, y, F)
    mean = F.expectation()
    metrics = {"revenue": rev, "bound": bound, "mean_value": mean,
               "revenue_fraction": rev / mean, "options": len(m)}
    contracts = [at_least("revenue >= guaranteed bound", rev, bound, 1e-6),
                 at_least(f"revenue >= {target} E[v]", rev, target * mean, 1e-6)]
    return Outcome(metrics, contracts, documents={"menu.json": m.to_json()})


def run_robust_myerson(params: dict) -> Outcome:
    y = _weighting(_need(params, "weighting"))
    F = _dist(_need(params, "dist"))
    slack = float(params.get("slack", 0.02))
    opt = brute_force_opt(F, y, _budget(params.get("budget")))
    beta, _ = beta_boundedness(y)
    price, mye = F.myerson()
    metrics = {"myerson_price": price, "myerson_revenue": mye, "oracle_opt": opt.revenue,
               "beta": beta, "ratio": mye / opt.revenue if opt.revenue > 0 else math.inf}
    contracts = [at_least("Mye >= beta * OPT * (1 - slack)", mye, beta * opt.revenue * (1 - slack),
                          1e-12)]
    if opt.menu.options and "t" in params:
        check = bound_lemma_checks(opt.menu, y, F, float(params["t"]), opt=opt.revenue)
        metrics["bounds"] = dict(zip(("lhs_low", "rhs_low", "lhs_high", "rhs_high"),
                                    check.as_tuple()))
        contracts.append(Contract("revenue split bounds", 0.0, 0.0, check.holds()))
    return Outcome(metrics, contracts, documents={"oracle_menu.json": opt.to_json()})


def run_loglog(params: dict) -> Outcome:
    family = WeightingFamily(tuple(_weighting(s) for s in _need(params, "family")))
    F = _dist(_need(params, "dist"))
    mech = loglog_mechanism(family, F, _budget(params.get("budget")),
                            float(params.get("slack", 0.02)))
    rng = np.random.default_rng(int(params.get("seed", 0)))
    sampled = mech.sample(rng)
    metrics = {"n": mech.n, "factor": mech.factor, "thresholds": list(mech.thresholds),
               "representatives": [family.members[i].label for i in mech.representatives],
               "members": mech.diagnostics,
               "sampled_menu": mech.menus.index(sampled)}
    contracts = [at_least(f"{d['member']}: revenue >= OPT / factor", d["revenue"],
                          d["guarantee"] * (1 - float(params.get("slack", 0.02))), 1e-12)
                 for d in mech.diagnostics]
    rows = [(d["member"], d["opt"], d["revenue"], d["guarantee"]) for d in mech.diagnostics]
    return Outcome(metrics, contracts,
                   tables={"members.csv": (["member", "opt", "revenue", "guarantee"], rows)},
                   documents={"menus.json": [m.to_json() for m in mech.menus]})


def _two_stage_menu(spec) -> PostedPriceMenu:
    outside = spec.get("outside_price")
    return PostedPriceMenu.from_pairs(
        [(float(_number(p)), math.inf if q is None else float(_number(q)))
         for p, q in _need(spec, "options")],
        outside_price=math.inf if outside is None else float(_number(outside)))


def run_two_stage(params: dict) -> Outcome:
    setting = TwoStageSetting(_dist(_need(params, "F1")), _dist(_need(params, "F2")),
                              _weighting(_need(params, "weighting")))
    ub = upper_bound(setting)
    best = best_two_stage(setting)
    metrics = {"U0": second_stage_utility(0.0, setting), "upper_bound": ub,
               "best_revenue": best.revenue, "candidates": best.candidates}
    contracts = [at_least("best revenue >= upper_bound / 2", best.revenue, ub / 2, 1e-6)]
    tables = {}
    if "menu" in params:
        m = _two_stage_menu(params["menu"])
        rev = revenue_two_stage(m, setting)
        metrics["menu_revenue"] = rev._asdict()
        contracts.append(at_least("upper_bound >= menu revenue", ub, rev.total, 1e-6))
        lo, hi = setting.F1.support[0], setting.F1.grid_upper()
        grid = np.linspace(lo, hi, int(params.get("grid", 1001)))
        tables["choices.csv"] = (["v1", "chosen_p", "chosen_l", "stage1_pay",
                                  "stage2_expected_pay"], choice_rows(m, setting, grid))
        if "expected_stage1" in params:
            contracts.append(close_to("stage-1 revenue == expected", rev.stage1,
                                      _number(params["expected_stage1"]), 1e-9))
    return Outcome(metrics, contracts, tables=tables)


def run_lb_ode(params: dict) -> Outcome:
    c = float(params.get("c", 2.0))
    if params.get("mode", "ode") == "u0":
        eps, n = float(_need(params, "eps")), float(_need(params, "n"))
        value = lb.u_eps(0.0, eps, n)
        closed = lb.u0_closed_form(eps, n)
        metrics = {"eps": eps, "n": n, "u0": value, "closed_form": closed,
                   "lower_bound": min(math.log(1 / eps), n)}
        contracts = [close_to("u_eps(0) == closed form", value, closed, 1e-10),
                     at_least("u_eps(0) >= min(ln 1/eps, n)", value, metrics["lower_bound"], 1e-12)]
        return Outcome(metrics, contracts)
    if "n" in params:
        n = float(params["n"])
    else:
        n = float(params.get("n_factor", 2.0)) * (2 / lb.alpha_c(c)) ** c
    cfg = lb.LowerBoundConfig(c=c, n=n, step=float(params.get("step", 0.05)),
                              forced_eps=params.get("forced_eps"), p_end=params.get("p_end"))
    report, traj = lb.check_contradiction(cfg)
    expect = params.get("expect_verdict", "CONTRADICTION")
    metrics = report.to_json()
    # lhs/rhs: p_0 against the price where l_bar reaches 1 (a contradiction needs lhs > rhs)
    cross = math.inf if report.p_cross_1 is None else report.p_cross_1
    contracts = [Contract(f"verdict == {expect}", report.p_0, cross, report.verdict == expect)]
    rows = list(zip(traj.p.tolist(), traj.l_bar.tolist(), traj.eps_p.tolist()))
    return Outcome(metrics, contracts, tables={"trajectory.csv": (["p", "l_bar", "eps_p"], rows)},
                   documents={"report.json": metrics})


def run_oracle(params: dict) -> Outcome:
    y = _weighting(_need(params, "weighting"))
    F = _dist(_need(params, "dist"))
    res = brute_force_opt(F, y, _budget(params.get("budget")))
    mye = F.myerson()[1]
    metrics = {"oracle_revenue": res.revenue, "myerson_revenue": mye,
               "budget_used": res.budget_used}
    contracts = [at_least("oracle >= Myerson", res.revenue, mye, 1e-9)]
    return Outcome(metrics, contracts, documents={"oracle_menu.json": res.to_json()})


def run_counterexample(params: dict) -> Outcome:
    eps = float(params.get("eps", 0.01))
    rep = monotonicity_counterexample(eps)
    metrics = {"monotonicity": rep.to_json()}
    contracts = [close_to("revenue under y1", rep.revenue_y1, rep.expected_y1, 1e-12),
                 close_to("revenue under y2", rep.revenue_y2, rep.expected_y2, 1e-12)]
    comparisons = []
    for case in params.get("composite_cases", []):
        setting = TwoStageSetting(_dist(_need(case, "dist1")) if "dist1" in case else uniform(),
                                  _dist(_need(case, "F2")), _weighting(_need(case, "weighting")))
        opt = CompositeOption(_number(_need(case, "x")), _number(_need(case, "p")),
                              tuple(case.get("mechanism", ["giveaway"])))
        value = composite_option_utility(_number(_need(case, "v")), opt, setting)
        row = {"case": case.get("name", ""), "computed": float(value),
               "computed_exact": str(Fraction(value).limit_denominator(10**6))}
        if "reference" in case:
            ref = _number(case["reference"])
            row["reference"] = str(ref)
            row["flag"] = "DISCREPANCY" if abs(float(value) - float(ref)) > 1e-12 else "MATCH"
        comparisons.append(row)
    metrics["composite"] = comparisons
    return Outcome(metrics, contracts, documents={"counterexample.json": metrics})


EXPERIMENTS: dict[str, Callable[[dict], Outcome]] = {
    "rae": run_rae,
    "single-shot": run_single_shot,
    "envelope": run_envelope,
    "welfare-extract": run_welfare_extract,
    "robust-myerson": run_robust_myerson,
    "loglog": run_loglog,
    "two-stage": run_two_stage,
    "lb-ode": run_lb_ode,
    "oracle": run_oracle,
    "counterexample": run_counterexample,
}


def run_experiment(kind: str, params: dict) -> Outcome:
    if kind not in EXPERIMENTS:
        raise ConfigError(f"unknown experiment {kind!r}")
    try:
        return EXPERIMENTS[kind](params)
    except (KeyError, TypeError) as exc:
        raise ConfigError(f"bad parameters for {kind}: {exc}") from exc
