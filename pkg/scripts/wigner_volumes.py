"""Negative Wigner volumes at alpha = 1 next to the reference values."""

import argparse

from su11nco import wigner
from su11nco.model import PA_THEN_PS, PS_THEN_PA
from su11nco.validation import REFERENCE_VOLUMES


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--points", type=int, default=64, help="Gauss-Legendre nodes per axis")
    ap.add_argument("--half-width", type=float, default=5.0)
    args = ap.parse_args()
    grid = wigner.QuadratureGrid(args.half_width, args.points)
    print(f"{'g':>4} {'scheme':>11} {'V':>8} {'reference':>9} {'integral':>10} {'dV refine':>10} {'dV extend':>10}")
    for g, refs in REFERENCE_VOLUMES.items():
        for scheme, ref in zip((PS_THEN_PA, PA_THEN_PS), refs):
            r = wigner.nco_negative_volume(scheme, g, 1.0, grid, check_convergence=True)
            rep = r.report
            print(f"{g:4.1f} {scheme.label:>11} {r.volume:8.4f} {ref:9.3f} {rep.integral:10.6f} "
                  f"{rep.refine_delta:10.1e} {rep.extend_delta:10.1e}")


if __name__ == "__main__":
    main()
