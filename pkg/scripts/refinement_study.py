"""Grid refinement of the solver oracles and of the probe constants.

Prints the stationary-exponential and heat-kernel errors with observed
orders, then backward/forward refined constants for the probe fields at
successive spacings. Results go to ``refinement.json``.
"""

import argparse
import math
import os

import numpy as np

from extremal_harnack import harness
from extremal_harnack.experiments import SolveConfig, solve_preset
from extremal_harnack.nonlinearity import from_id
from extremal_harnack.pucci import EllipticityPair
from extremal_harnack.report import write_json
from extremal_harnack.solver import ProblemSpec, make_grid, solve


def exp_error(cells):
    spec = ProblemSpec("super", EllipticityPair(1.0, 1.0), lambda x: np.exp(x[..., 0]),
                       nonlinearity=from_id("identity"))
    grid = make_grid(spec, 1, 1.0, cells, 0.0, 1.0, save_interval=0.125)
    f = solve(spec, grid)
    return float(np.max(np.abs(f.values - np.exp(grid.points()[..., 0])[None])))


def heat(x, t, t0=0.1):
    s = t + t0
    return np.exp(-x[..., 0] ** 2 / (4 * s)) / np.sqrt(4 * np.pi * s)


def heat_error(cells):
    spec = ProblemSpec("super", EllipticityPair(1.0, 1.0), lambda x: heat(x, 0.0),
                       drift=lambda g: 0.0, boundary=heat)
    grid = make_grid(spec, 1, 2.0, cells, 0.0, 0.5, save_interval=0.5)
    return float(np.max(np.abs(solve(spec, grid).values[-1] - heat(grid.points(), 0.5))))


def orders(errs):
    return [math.log2(a / b) for a, b in zip(errs, errs[1:])]


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--cells", type=int, nargs="+", default=[64, 128, 256])
    ap.add_argument("--probe-cells", type=int, nargs="+", default=[256, 512])
    ap.add_argument("--out", default="out/refinement")
    args = ap.parse_args()
    os.makedirs(args.out, exist_ok=True)
    body = {}
    e = [exp_error(c) for c in args.cells]
    body["exp"] = {"cells": args.cells, "error": e, "order": orders(e)}
    print("exp:  ", " ".join(f"{x:.3e}" for x in e), "orders", orders(e))
    hk = [heat_error(c // 2) for c in args.cells]
    body["heat"] = {"cells": [c // 2 for c in args.cells], "error": hk, "order": orders(hk)}
    print("heat: ", " ".join(f"{x:.3e}" for x in hk), "orders", orders(hk))
    nl = from_id("logpow:beta=1")
    body["probes"] = {}
    for data in ("gaussian", "two-bump"):
        for cells in args.probe_cells:
            f = solve_preset(SolveConfig(data=data, cells=cells), nl)
            b = harness.backward_probe(f, nl)
            fw = harness.forward_probe(f, nl)
            body["probes"][f"{data}/{cells}"] = {"backward": b.c_refined, "forward": fw.c_refined}
            print(f"{data:9s} cells={cells:4d} backward {b.c_refined} forward {fw.c_refined}")
    write_json(os.path.join(args.out, "refinement.json"), body)


if __name__ == "__main__":
    main()
