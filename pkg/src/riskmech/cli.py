"""Command-line runner: ``riskmech <experiment> --config FILE [--set k=v]... [--out DIR]``.

Exit status is 0 when every contract of the run holds, 2 when a contract
fails and 1 on any error (no artifacts are written in that case).
"""
from __future__ import annotations

import argparse
import copy
import csv
import io
import itertools
import json
import math
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from .errors import ConfigError
from .experiments import EXPERIMENTS, Outcome, jsonable, run_experiment

SCHEMA_VERSION = 1
EXIT_OK, EXIT_ERROR, EXIT_CONTRACT = 0, 1, 2


# -- config handling -------------------------------------------------------------------


def load_config(path: str | None) -> dict:
    if path is None:
        return {}
    try:
        with open(path) as fh:
            cfg = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    if not isinstance(cfg, dict):
        raise ConfigError("config must be a JSON object")
    return cfg


def _parse_value(text: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def set_path(params: dict, dotted: str, value) -> None:
    """Assign ``params[a][b]... = value`` for ``dotted = "a.b..."``, creating objects as needed."""
    keys = dotted.split(".")
    node = params
    for k in keys[:-1]:
        if not isinstance(node.get(k, {}), dict):
            raise ConfigError(f"cannot set {dotted}: {k} is not an object")
        node = node.setdefault(k, {})
    node[keys[-1]] = value


def apply_overrides(params: dict, overrides: list[str]) -> dict:
    params = copy.deepcopy(params)
    for item in overrides:
        if "=" not in item:
            raise ConfigError(f"--set expects key=value, got {item!r}")
        key, text = item.split("=", 1)
        set_path(params, key.strip(), _parse_value(text))
    return params


def resolve(subcommand: str, cfg: dict, overrides: list[str]) -> tuple[str, dict]:
    kind = cfg.get("experiment", subcommand)
    if kind != subcommand:
        raise ConfigError(f"config is for {kind!r}, not {subcommand!r}")
    params = cfg.get("params", {})
    if not isinstance(params, dict):
        raise ConfigError("'params' must be an object")
    return kind, apply_overrides(params, overrides)


# -- artifacts --------------------------------------------------------------------------


def _cell(x) -> str:
    if x is None:
        return ""
    if isinstance(x, bool):
        return str(x).lower()
    if isinstance(x, float) or hasattr(x, "dtype"):
        x = float(x)
        if math.isnan(x):
            return "nan"
        return format(x, ".17g")
    return str(x)


def csv_text(header: list[str], rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf)
    w.writerow(header)
    for row in rows:
        w.writerow([_cell(x) for x in row])
    return buf.getvalue()


def write_outcome(out: Path, kind: str, params: dict, outcome: Outcome, runtime_ms: float) -> dict:
    out.mkdir(parents=True, exist_ok=True)
    for name, (header, rows) in outcome.tables.items():
        (out / name).write_text(csv_text(header, rows), newline="")
    for name, doc in outcome.documents.items():
        (out / name).write_text(json.dumps(jsonable(doc), indent=2, sort_keys=True) + "\n")
    summary = {"schema_version": SCHEMA_VERSION, "experiment": kind, "params": jsonable(params),
               "metrics": jsonable(outcome.metrics),
               "contracts": [c.to_json() for c in outcome.contracts],
               "runtime_ms": runtime_ms}
    (out / "summary.json").write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")
    return summary


def run_once(kind: str, params: dict, out: Path) -> tuple[int, dict]:
    start = time.perf_counter()
    outcome = run_experiment(kind, params)
    runtime = (time.perf_counter() - start) * 1000.0
    summary = write_outcome(out, kind, params, outcome, runtime)
    return (EXIT_OK if outcome.passed else EXIT_CONTRACT), summary


# -- sweeps -----------------------------------------------------------------------------


def sweep_points(params: dict, ranges: dict[str, list]) -> list[dict]:
    """Cartesian product of ``ranges`` applied to ``params`` (in key order)."""
    keys = list(ranges)
    if any(len(ranges[k]) == 0 for k in keys):
        return []
    points = []
    for combo in itertools.product(*(ranges[k] for k in keys)):
        p = copy.deepcopy(params)
        for k, v in zip(keys, combo):
            set_path(p, k, v)
        points.append(p)
    return points


def _sweep_worker(job) -> dict:
    index, kind, params, out = job
    try:
        code, summary = run_once(kind, params, Path(out))
        return {"index": index, "status": code, "summary": summary, "error": None}
    except Exception as exc:  # reported per point, the batch continues
        return {"index": index, "status": EXIT_ERROR, "summary": None,
                "error": f"{type(exc).__name__}: {exc}"}


def _flat_scalars(d: dict, prefix: str = "") -> dict:
    flat = {}
    for k, v in d.items():
        key = f"{prefix}{k}"
        if isinstance(v, dict):
            flat.update(_flat_scalars(v, key + "."))
        elif isinstance(v, (int, float, str, bool)) or v is None:
            flat[key] = v
    return flat


def run_sweep(kind: str, params: dict, ranges: dict[str, list], out: Path, jobs: int) -> int:
    points = sweep_points(params, ranges)
    jobs_list = [(i, kind, p, str(out / "points" / f"{i:03d}")) for i, p in enumerate(points)]
    if jobs > 1 and len(jobs_list) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_sweep_worker, jobs_list))
    else:
        results = [_sweep_worker(j) for j in jobs_list]

    keys = list(ranges)
    metric_keys: list[str] = []
    for r in results:
        if r["summary"]:
            for k in _flat_scalars(r["summary"]["metrics"]):
                if k not in metric_keys:
                    metric_keys.append(k)
    rows = []
    for r, p in zip(results, points):
        flat = _flat_scalars(r["summary"]["metrics"]) if r["summary"] else {}
        passed = r["status"] == EXIT_OK
        rows.append([r["index"]] + [_get_path(p, k) for k in keys] + [passed, r["error"] or ""]
                    + [flat.get(k) for k in metric_keys])
    out.mkdir(parents=True, exist_ok=True)
    header = ["index"] + keys + ["pass", "error"] + metric_keys
    (out / "sweep.csv").write_text(csv_text(header, rows), newline="")
    failed = [r["index"] for r in results if r["status"] == EXIT_ERROR]
    report = {"schema_version": SCHEMA_VERSION, "experiment": kind, "ranges": jsonable(ranges),
              "points": len(points), "failed_points": failed,
              "errors": {str(r["index"]): r["error"] for r in results if r["error"]},
              "contract_failures": [r["index"] for r in results if r["status"] == EXIT_CONTRACT]}
    (out / "sweep_summary.json").write_text(json.dumps(report, indent=2, sort_keys=True) + "\n")
    if failed:
        return EXIT_ERROR
    return EXIT_CONTRACT if report["contract_failures"] else EXIT_OK


def _get_path(d: dict, dotted: str):
    for k in dotted.split("."):
        d = d[k]
    return d


def _parse_ranges(cfg: dict, items: list[str]) -> dict[str, list]:
    ranges = dict(cfg.get("sweep", {}))
    for item in items:
        if "=" not in item:
            raise ConfigError(f"--range expects key=v1,v2,..., got {item!r}")
        key, text = item.split("=", 1)
        ranges[key.strip()] = [] if not text else [_parse_value(t) for t in text.split(",")]
    for k, v in ranges.items():
        if not isinstance(v, list):
            raise ConfigError(f"sweep range for {k} must be a list")
    return ranges


# -- entry point ------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="riskmech", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="JSON config file")
        p.add_argument("--set", dest="overrides", action="append", default=[],
                       metavar="KEY=VALUE", help="override a parameter (dotted keys, JSON values)")
        p.add_argument("--jobs", type=int, default=1, help="parallel sweep points")
        p.add_argument("--out", help="output directory")

    for name in EXPERIMENTS:
        common(sub.add_parser(name, help=f"run the {name} experiment"))
    sw = sub.add_parser("sweep", help="cartesian-product sweep over a config's parameters")
    common(sw)
    sw.add_argument("--experiment", help="experiment kind when the config does not name one")
    sw.add_argument("--range", dest="ranges", action="append", default=[],
                    metavar="KEY=V1,V2,...", help="values for one parameter")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
        if args.command == "sweep":
            kind = args.experiment or cfg.get("experiment")
            if kind not in EXPERIMENTS:
                raise ConfigError(f"sweep needs a known experiment, got {kind!r}")
            _, params = resolve(kind, cfg, args.overrides)
            ranges = _parse_ranges(cfg, args.ranges)
            out = Path(args.out or f"runs/sweep-{kind}")
            code = run_sweep(kind, params, ranges, out, max(1, args.jobs))
            print(f"sweep {kind}: exit {code}, results in {out}")
            return code
        kind, params = resolve(args.command, cfg, args.overrides)
        out = Path(args.out or f"runs/{kind}")
        code, summary = run_once(kind, params, out)
    except Exception as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_ERROR
    for c in summary["contracts"]:
        print(f"[{'PASS' if c['pass'] else 'FAIL'}] {c['name']}: lhs={c['lhs']} rhs={c['rhs']}")
    print(f"summary written to {out / 'summary.json'}")
    return code


if __name__ == "__main__":
    sys.exit(main())
