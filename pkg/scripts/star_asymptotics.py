#!/usr/bin/env python3
"""Star with m = 4: optimal stay probability and n * V as n grows."""

import argparse

from uniformpatrol.networks import build_network
from uniformpatrol.stackelberg import solve, star_asymptote_m4


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--sizes", type=int, nargs="*", default=[2, 3, 5, 10, 20, 50, 100])
    args = ap.parse_args()
    r_inf, rate = star_asymptote_m4()
    print(f"limit: r_hat -> {r_inf:.7f}, n*V -> {rate:.7f}")
    print(f"{'n':>5} {'r_hat':>9} {'n*V':>9}")
    for n in args.sizes:
        res = solve(build_network("star", n), 4)
        print(f"{n:>5} {1 - n * res.params['p']:9.5f} {n * res.value:9.5f}")


if __name__ == "__main__":
    main()
