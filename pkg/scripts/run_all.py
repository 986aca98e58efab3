"""Run the full desk-scale experiment twice and confirm byte-identical outputs."""

import argparse
import filecmp
import os
import sys

from extremal_harnack.cli import run


def same_tree(a, b):
    cmp = filecmp.dircmp(a, b, ignore=["runtime.txt"])
    if cmp.diff_files or cmp.left_only or cmp.right_only:
        return False
    return all(same_tree(os.path.join(a, d), os.path.join(b, d)) for d in cmp.common_dirs)


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--out", default="out/run_all")
    args = ap.parse_args()
    dirs = [os.path.join(args.out, name) for name in ("first", "second")]
    codes = [run(["all", "--seed", str(args.seed), "--out", d]) for d in dirs]
    identical = same_tree(*dirs)
    print(f"exit codes {codes}; outputs identical: {identical}")
    sys.exit(0 if identical and codes == [0, 0] else 2)


if __name__ == "__main__":
    main()
