#!/usr/bin/env python3
"""CSV data for the interception curves: parameter sweeps and delay curves.

Writes into --out:
  star_m2_sweep.csv    a_2(n, p) on the star for n = 2..8, reflecting ends
  delay_curves.csv     pi against d (up to --dmax) at each family's optimum
  away_c5.csv          away distributions on C5 converging to the fixed point
"""

import argparse
import csv
import pathlib

import numpy as np

from uniformpatrol.dynamics import away_sequence
from uniformpatrol.interception import closed_star_m2, interception_curve
from uniformpatrol.networks import build_matrix, build_network
from uniformpatrol.serialize import fmt
from uniformpatrol.stackelberg import solve

CASES = [("line", 4, m) for m in (2, 4, 6)] + [("line", 5, m) for m in (2, 4, 6)] + [
    ("circle", 5, 4), ("star_in_circle", 4, 2), ("star", 3, 4)]


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--out", type=pathlib.Path, default=pathlib.Path("results/figures"))
    ap.add_argument("--dmax", type=int, default=40)
    args = ap.parse_args()
    args.out.mkdir(parents=True, exist_ok=True)

    with open(args.out / "star_m2_sweep.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["n", "p", "value"])
        for n in range(2, 9):
            for p in np.linspace(0, 1 / n, 101):
                w.writerow([n, fmt(p), fmt(closed_star_m2(n, p))])

    with open(args.out / "delay_curves.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["family", "n", "m", "node", "d", "pi"])
        for fam, n, m in CASES:
            res = solve(build_network(fam, n), m)
            curve = interception_curve(res.matrix(), res.attacker_node, m, args.dmax)
            for pt in curve.reachable():
                w.writerow([fam, n, m, res.attacker_node, pt.d, fmt(pt.pi)])
            w.writerow([fam, n, m, res.attacker_node, "inf", fmt(curve.limit if curve.limit is not None else np.nan)])
            print(f"{fam}({n}) m={m}: V={res.value:.4f} at d={res.attacker_delay}, limit {curve.limit:.4f}")

    T = build_matrix(build_network("circle", 5), [0.382])
    with open(args.out / "away_c5.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t"] + [f"x_{v}" for v in range(1, 6)])
        for x in away_sequence(T, 0, 15).steps:
            w.writerow([x.t] + [fmt(v) for v in x.probs])
    print(f"wrote CSV files to {args.out}")


if __name__ == "__main__":
    main()
