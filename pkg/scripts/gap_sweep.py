"""Equilibrium force, non-equilibrium correction and heat flux versus gap.

    python scripts/gap_sweep.py --plate1 sic --plate2 gold --T1 350 --T2 300 > sweep.csv
"""
import argparse
import csv
import sys

import numpy as np

from neqcasimir import (
    QuadratureSpec,
    equilibrium_force,
    heat_transfer_power,
    library_model,
    noneq_force_delta,
)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.split("\n")[0])
    ap.add_argument("--plate1", default="sic")
    ap.add_argument("--plate2", default="gold")
    ap.add_argument("--T1", type=float, default=350.0)
    ap.add_argument("--T2", type=float, default=300.0)
    ap.add_argument("--gap-min", type=float, default=1e-8)
    ap.add_argument("--gap-max", type=float, default=1e-6)
    ap.add_argument("--points", type=int, default=9)
    ap.add_argument("--rel-tol", type=float, default=1e-5)
    args = ap.parse_args(argv)
    m1, m2 = library_model(args.plate1), library_model(args.plate2)
    spec = QuadratureSpec(rel_tol=args.rel_tol)
    out = csv.writer(sys.stdout, lineterminator="\n")
    out.writerow(["gap_m", "force_eq_T2_Pa", "delta_force_Pa", "heat_W_m2"])
    for gap in np.geomspace(args.gap_min, args.gap_max, args.points):
        F = equilibrium_force(m1, m2, gap, args.T2, spec)
        D = noneq_force_delta(m1, m2, gap, args.T1, args.T2, spec)
        W = heat_transfer_power(m1, m2, gap, args.T1, args.T2, spec)
        out.writerow([repr(float(gap)), repr(F.value), repr(D.value), repr(W.value)])
        sys.stdout.flush()


if __name__ == "__main__":
    main()
