#!/usr/bin/env python3
"""Element-wise |sigma - rho| matrix for one pair of a saved reconstruction.

Usage: python scripts/diff_map.py --config cfg.json [--out diff.csv]
"""
import sys

from pairtomo.cli import main

if __name__ == "__main__":
    argv = sys.argv[1:]
    if "--out" not in argv:
        argv += ["--out", "diff_map.csv"]
    sys.exit(main(["diff-map", *argv]))
