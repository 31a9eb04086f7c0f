#!/usr/bin/env python3
"""Sweep the legacy debris stock and track the treaty conditions.

Writes a CSV and prints where the no-defection and self-enforcement
booleans flip along the sweep.

Usage:
    python scripts/legacy_debris_sweep.py [--points 17] [--out legacy_sweep.csv]
"""

import argparse
from dataclasses import replace

import numpy as np

from orbituse import (
    MODEL_DERIVED,
    SYM2,
    OrbitUseError,
    TaxSchedule,
    analyze_treaty,
    solve_equilibrium,
)
from orbituse.reporting import rows_to_csv


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--points", type=int, default=17)
    parser.add_argument("--low", type=float, default=0.0)
    parser.add_argument("--high", type=float, default=8.0)
    parser.add_argument("--out", default="legacy_sweep.csv")
    args = parser.parse_args()

    taxes = TaxSchedule.zeros(SYM2.n_sectors, SYM2.n_markets)
    header = [
        "legacy_debris", "total_fleet", "debris_stock", "survival",
        "qbar", "alpha", "beta", "averting_sustainable", "self_enforcing", "error",
    ]
    rows = []
    previous = None
    for legacy in np.linspace(args.low, args.high, args.points):
        scenario = replace(SYM2, legacy_debris=float(legacy))
        try:
            eq = solve_equilibrium(scenario, taxes, 0.0)
            analysis = analyze_treaty(scenario, taxes, MODEL_DERIVED)
            coeff = analysis.coefficients[0]
            flags = (analysis.averting_sustainable, analysis.self_enforcing)
            rows.append([
                float(legacy), eq.total_fleet, eq.debris.stock,
                eq.debris.survival, analysis.qbar, coeff.alpha, coeff.beta,
                flags[0], flags[1], "",
            ])
            if previous is not None and flags != previous:
                print(f"condition flip at legacy debris {legacy:.3f}: "
                      f"averting_sustainable={flags[0]} self_enforcing={flags[1]}")
            previous = flags
        except OrbitUseError as error:
            rows.append([float(legacy)] + [float("nan")] * 8 + [type(error).__name__])
            previous = None

    with open(args.out, "w") as handle:
        handle.write(rows_to_csv(header, rows))
    print(f"wrote {len(rows)} rows to {args.out}")


if __name__ == "__main__":
    main()
