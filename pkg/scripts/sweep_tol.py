#!/usr/bin/env python3
"""Solver tolerance study on the two noisy-CNOT cases.

Usage: python scripts/sweep_tol.py [--config cfg.json] [--out tol.csv] [--jobs N]
"""
import sys

from pairtomo.cli import main

if __name__ == "__main__":
    argv = sys.argv[1:]
    if "--out" not in argv:
        argv += ["--out", "sweep_tol.csv"]
    sys.exit(main(["sweep-tol", *argv]))
