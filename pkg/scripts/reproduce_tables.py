#!/usr/bin/env python3
"""Recompute every reference table and write one JSON report per table."""

import argparse
import json
import pathlib
import time

from uniformpatrol.reproduce import TABLE_IDS, reproduce_table
from uniformpatrol.serialize import dumps


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--ids", nargs="*", default=list(TABLE_IDS), choices=TABLE_IDS)
    ap.add_argument("--out", type=pathlib.Path, default=pathlib.Path("results/tables"))
    args = ap.parse_args()
    args.out.mkdir(parents=True, exist_ok=True)
    summary = {}
    for tid in args.ids:
        t0 = time.perf_counter()
        rep = reproduce_table(tid)
        dt = time.perf_counter() - t0
        print(rep.format())
        print(f"  ({dt:.1f}s)\n")
        (args.out / f"table{tid}.json").write_text(dumps(rep.to_dict()) + "\n")
        summary[tid] = {"ok": rep.ok, "max_deviation": rep.max_deviation, "seconds": round(dt, 2)}
    (args.out / "summary.json").write_text(json.dumps(summary, indent=2) + "\n")
    return 0 if all(v["ok"] for v in summary.values()) else 1


if __name__ == "__main__":
    raise SystemExit(main())
