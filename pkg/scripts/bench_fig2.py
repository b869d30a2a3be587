#!/usr/bin/env python3
"""Run the seven standard three-qubit benchmark cases and write a CSV.

Usage: python scripts/bench_fig2.py [--config cfg.json] [--out bench.csv] [--jobs N]
"""
import sys

from pairtomo.cli import main

if __name__ == "__main__":
    argv = sys.argv[1:]
    if "--out" not in argv:
        argv += ["--out", "bench_fig2.csv"]
    sys.exit(main(["bench-fig2", *argv]))
