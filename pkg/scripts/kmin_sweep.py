"""Dyadic sweep of the pointwise inequality for the counterexample family.

Writes ``kmin_sweep.csv`` (eps0, k, passed) and ``kmin.json``.
"""

import argparse
import os

from extremal_harnack import counterexample as cx
from extremal_harnack.report import write_csv, write_json


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--eps0", type=float, nargs="+", default=[0.5, 1.0, 2.0])
    ap.add_argument("--grid-n", type=int, default=64)
    ap.add_argument("--out", default="out/kmin")
    args = ap.parse_args()
    os.makedirs(args.out, exist_ok=True)
    grid = cx.GridSpec(n=args.grid_n)
    rows, summary = [], {}
    for eps0 in args.eps0:
        sweep = cx.k_sweep(eps0, grid)
        summary[str(eps0)] = sweep.to_dict()
        rows.extend((eps0, k, ok) for k, ok in sweep.passes.items())
        print(f"eps0={eps0:g}: k_min = {sweep.k_min} (monotone: {sweep.monotone})")
    write_csv(os.path.join(args.out, "kmin_sweep.csv"), ["eps0", "k", "passed"], rows)
    write_json(os.path.join(args.out, "kmin.json"), summary)


if __name__ == "__main__":
    main()
