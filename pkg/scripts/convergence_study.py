"""Grid convergence of lambda* and of the surface conditions on a small-amplitude wave.

    python3 scripts/convergence_study.py configs/v1_step.json --s0 0.05
"""

import argparse
import math

from deepstokes.config import load_config
from deepstokes.continuation import ContinuationConfig, run_branch
from deepstokes.dispersion import default_grid, find_bifurcation
from deepstokes.grid import build_grid
from deepstokes.physical import surface_conditions


def orders(values):
    return [math.log2(a / b) for a, b in zip(values[:-1], values[1:])]


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("config")
    ap.add_argument("--s0", type=float, default=0.05)
    ap.add_argument("--levels", type=int, default=3)
    args = ap.parse_args()

    cfg = load_config(args.config)
    spec, g, P = cfg.vorticity, cfg.g, cfg.grid.P_max

    print("dispersion relation")
    dps = [4e-2 / 2**k for k in range(args.levels + 1)]
    lams = [find_bifurcation(spec, 0.0, g, default_grid(spec, P, dp)).lam for dp in dps]
    diffs = [abs(b - a) for a, b in zip(lams[:-1], lams[1:])]
    for dp, lam in zip(dps, lams):
        print(f"  dp {dp:.5f}  lambda* {lam:.14f}")
    print("  observed orders", " ".join(f"{o:.3f}" for o in orders(diffs)))
    deep = find_bifurcation(spec, 0.0, g, default_grid(spec, 2 * P, dps[-1])).lam
    print(f"  doubling P_max shifts lambda* by {abs(deep - lams[-1]):.2e}")

    print(f"surface conditions at s0 = {args.s0}")
    kin, dyn = [], []
    for k in range(args.levels):
        n = 2**k
        grid = build_grid(16 * n, 16 * n, 64 * n, P, spec)
        st = run_branch(spec, g, ContinuationConfig(s0=args.s0, max_steps=1), grid).points[0].state
        sc = surface_conditions(spec, st, g)
        kin.append(sc["kinematic"])
        dyn.append(sc["dynamic"])
        print(f"  grid {grid.shape}  kinematic {sc['kinematic']:.3e}  dynamic {sc['dynamic']:.3e}")
    print("  kinematic orders", " ".join(f"{o:.3f}" for o in orders(kin)))
    print("  dynamic orders  ", " ".join(f"{o:.3f}" for o in orders(dyn)))


if __name__ == "__main__":
    main()
