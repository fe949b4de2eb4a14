"""Trace a branch from a run configuration and print a compact table.

    python3 scripts/trace_branch.py configs/v0_irrotational.json --every 10
"""

import argparse
import time

from deepstokes.config import load_config
from deepstokes.continuation import run_branch


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("config")
    ap.add_argument("--every", type=int, default=5, help="print every n-th point")
    args = ap.parse_args()

    cfg = load_config(args.config)
    grid = cfg.grid.build(cfg.vorticity)
    t0 = time.perf_counter()
    branch = run_branch(cfg.vorticity, cfg.g, cfg.continuation, grid)
    elapsed = time.perf_counter() - t0

    print(f"lambda* = {branch.bifurcation.lam:.12g}  grid {grid.shape}")
    print(f"{'step':>5} {'s':>10} {'lambda':>12} {'amplitude':>11} {'max_hp':>9} {'tau':>7} {'it':>3}")
    for pt in branch.points:
        if pt.step % args.every == 0 or pt is branch.points[-1]:
            print(f"{pt.step:5d} {pt.s:10.4f} {pt.lam:12.8f} {pt.amplitude:11.6f} "
                  f"{pt.max_hp:9.4f} {pt.tau_fit:7.4f} {pt.newton_iters:3d}")
    print(f"{len(branch)} points in {elapsed:.1f}s, termination: {branch.termination}")
    if branch.termination.detail:
        print(f"  {branch.termination.detail}")


if __name__ == "__main__":
    main()
