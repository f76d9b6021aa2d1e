"""Spectral heat flux density between two plates on the adaptive frequency nodes.

    python scripts/heat_spectrum.py --gap 1e-7 > spectrum.csv
"""
import argparse
import csv
import sys

import numpy as np

from neqcasimir import QuadratureSpec, heat_transfer_power, library_model
from neqcasimir.fluctuation import HBAR, bose_occupation


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.split("\n")[0])
    ap.add_argument("--plate1", default="sic")
    ap.add_argument("--plate2", default="gold")
    ap.add_argument("--gap", type=float, default=1e-7)
    ap.add_argument("--T1", type=float, default=350.0)
    ap.add_argument("--T2", type=float, default=300.0)
    ap.add_argument("--rel-tol", type=float, default=1e-5)
    args = ap.parse_args(argv)
    W = heat_transfer_power(library_model(args.plate1), library_model(args.plate2), args.gap,
                            args.T1, args.T2, QuadratureSpec(rel_tol=args.rel_tol))
    omega, dens = W.samples[:, 0], W.samples[:, 1]
    # the integrand of W over omega
    spectral = HBAR / (2 * np.pi) * omega * (bose_occupation(omega, args.T1) - bose_occupation(omega, args.T2)) * dens
    out = csv.writer(sys.stdout, lineterminator="\n")
    out.writerow(["omega_rad_s", "H_kernel_m^-2", "heat_density_W_s_m^-2"])
    for row in zip(omega, dens, spectral):
        out.writerow([repr(float(x)) for x in row])
    print(f"# total {W.value!r} W/m^2 +- {W.error:.2e}", file=sys.stderr)


if __name__ == "__main__":
    main()
