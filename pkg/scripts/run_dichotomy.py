#!/usr/bin/env python3
"""Finiteness dichotomy experiment: count sweeps for the two threshold cases.

The eigenvalue case (phi1 odd) keeps N(z) constant toward the threshold; the
resonance case keeps gaining eigenvalues.  The resonance run defaults to the
cross-weight-6 pair energy, whose accumulation rate is large enough to observe
on a desk-scale grid.
"""
import argparse

import numpy as np

from lattice3b import (builtin_model, count_report, coupling_threshold,
                       sin_axis_form_factor, write_report)


def critical(spec):
    return spec.with_params(mu1=coupling_threshold(spec, 1),
                            mu2=coupling_threshold(spec, 2))


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--case", choices=("resonance", "eigenvalue"), required=True)
    ap.add_argument("--grid", type=int, default=None)
    ap.add_argument("--cross-weight", type=float, default=None)
    ap.add_argument("--kmin", type=float, default=0.0)
    ap.add_argument("--kmax", type=float, default=8.0)
    ap.add_argument("--out", default=None)
    args = ap.parse_args()

    if args.case == "resonance":
        n = args.grid or 24
        cw = args.cross_weight if args.cross_weight is not None else 6.0
        spec = critical(builtin_model(n, 0.0, 0.0, cross_weight=cw))
    else:
        n = args.grid or 16
        cw = args.cross_weight if args.cross_weight is not None else 1.0
        spec = critical(builtin_model(n, 0.0, 0.0, cross_weight=cw,
                                      phi1=sin_axis_form_factor(1, 0)))
    print(f"case={args.case} n={n} cross_weight={cw} "
          f"mu=({spec.mu1:.6g}, {spec.mu2:.6g})")
    s_values = 10.0 ** (-np.arange(args.kmin, args.kmax + 1e-9))
    rep = count_report(spec, s_values, with_hs=False)
    print(rep.to_csv())
    if args.out:
        write_report(rep, args.out, "csv")


if __name__ == "__main__":
    main()
