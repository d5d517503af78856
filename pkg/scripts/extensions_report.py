#!/usr/bin/env python3
"""Memory patroller and edge-vision attacker under both conditioning modes."""

import argparse

from uniformpatrol.extensions import memory_discrepancies, memory_solve, vision_discrepancies, vision_solve
from uniformpatrol.networks import build_network
from uniformpatrol.stackelberg import solve


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--D", type=int, default=10)
    args = ap.parse_args()
    no_vision = solve(build_network("star_in_circle", 4), 2).value
    for mode in ("normalized", "exact"):
        mem = memory_solve(D=args.D, conditioning=mode)
        vis = vision_solve(D=args.D, conditioning=mode, no_vision_value=no_vision)
        print(f"[{mode}]")
        print(f"  memory  p={mem.p:.5f} s={mem.s:.5f} V={mem.value:.6f} delays={mem.delays} "
              f"gain over memoryless {100 * mem.gain:.1f}%")
        print(f"  vision  p={vis.p:.5f} q={vis.q:.5f} r={vis.r:.5f} V={vis.value:.6f} "
              f"d_A={vis.d_adjacent} d_C={vis.d_center} (no vision {no_vision:.5f})")
    mem = memory_solve(D=args.D)
    vis = vision_solve(D=args.D, no_vision_value=no_vision)
    print("discrepancies with the printed figures:")
    for d in memory_discrepancies(mem) + vision_discrepancies(vis):
        print(f"  - {d['item']}: printed {d['printed']}, computed {d['computed']}")


if __name__ == "__main__":
    main()
