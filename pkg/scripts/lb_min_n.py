"""Locate the smallest n at which the lower-bound ODE run reports a contradiction.

Usage: python3 scripts/lb_min_n.py [--c 2 1.5 3] [--n-max 1e6]
"""
import argparse
import json
import time

from riskmech.lowerbound import LowerBoundConfig, alpha_c, check_contradiction, min_n_for_contradiction


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--c", type=float, nargs="+", default=[2.0])
    parser.add_argument("--n-max", type=float, default=1e6)
    args = parser.parse_args()
    rows = []
    for c in args.c:
        N = (2 / alpha_c(c)) ** c
        start = time.perf_counter()
        at_2n, _ = check_contradiction(LowerBoundConfig(c=c, n=2 * N))
        n_min = min_n_for_contradiction(c, n_max=args.n_max)
        rows.append({"c": c, "N": N, "verdict_at_2N": at_2n.verdict,
                     "p_cross_1_at_2N": at_2n.p_cross_1, "p_0_at_2N": at_2n.p_0,
                     "min_n": n_min, "seconds": round(time.perf_counter() - start, 2)})
    print(json.dumps(rows, indent=2))


if __name__ == "__main__":
    main()
