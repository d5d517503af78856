#!/usr/bin/env python3
"""Simulate every oracle scenario and compare with the analytic value."""

import argparse
import time

from uniformpatrol.reproduce import run_montecarlo


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--trials", type=int, default=1_000_000)
    ap.add_argument("--seed", type=int, default=12345)
    ap.add_argument("--workers", type=int, default=1)
    args = ap.parse_args()
    t0 = time.perf_counter()
    rows = run_montecarlo(args.trials, args.seed, args.workers)
    print(f"{'scenario':32} {'analytic':>9} {'simulated':>9} {'stderr':>8} {'z':>6}")
    for r in rows:
        e = r["estimate"]
        print(f"{r['name']:32} {r['analytic']:9.5f} {e.p_hat:9.5f} {e.stderr:8.5f} {r['z']:+6.2f}")
    bad = [r["name"] for r in rows if not r["ok"]]
    print(f"{len(rows)} scenarios in {time.perf_counter() - t0:.1f}s; outside 3 sigma: {bad or 'none'}")
    return 1 if bad else 0


if __name__ == "__main__":
    raise SystemExit(main())
