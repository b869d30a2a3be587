#!/usr/bin/env python3
"""Reconstruct the cross-resonance CNOT over a 4x4 (beta, phi_zz) grid.

Usage: python scripts/sweep_cr.py [--config cfg.json] [--out sweep.csv] [--jobs N]
"""
import sys

from pairtomo.cli import main

if __name__ == "__main__":
    argv = sys.argv[1:]
    if "--out" not in argv:
        argv += ["--out", "sweep_cr.csv"]
    sys.exit(main(["sweep-cr", *argv]))
