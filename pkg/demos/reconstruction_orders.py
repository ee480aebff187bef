#!/usr/bin/env python3
"""Order-by-order reconstruction quality across truncation depths.

Forward-maps the example spectrum at several radii, reconstructs it back at
expansion orders 0 through 4, and prints the worst-component error at each
order next to the fixed-point reference answer.  Shallow truncation (large
rho) converges fast; deep truncation (rho = 4-6) shows why the higher
orders pay off and where the expansion reaches its limits.
"""
import warnings

import numpy as np

from sphertrunc import fixed_point_solve, forward_map, reconstruct

LAM = np.array([0.1, 0.3, 0.8, 2.2])


def main():
    print(f"population spectrum: {LAM}")
    print()
    header = f"{'rho':>6} " + " ".join(f"{'order ' + str(n):>10}" for n in range(5))
    print(header + f" {'fixed point':>12} {'steps':>6}")
    notes = []
    for rho in (4.0, 6.0, 12.0, 40.0, 100.0):
        mu = forward_map(rho, LAM)
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            rec = reconstruct(mu, rho, order=4)
        notes += [f"rho={rho:g}: {w.message}" for w in caught]
        errs = [float(np.max(np.abs(ps - LAM))) for ps in rec.partial_sums]
        lam_it, trace = fixed_point_solve(mu, rho, tol=1e-10)
        err_it = float(np.max(np.abs(lam_it - LAM)))
        row = f"{rho:6.1f} " + " ".join(f"{e:10.3e}" for e in errs)
        print(row + f" {err_it:12.3e} {trace.steps:6d}")
    print()
    for note in notes:
        print(f"note: {note}")
    if notes:
        print("(deep truncation can push the crude first-order estimate of the")
        print(" smallest eigenvalue below zero; later orders pull it back)")
        print()
    print("Each column is the sup-norm spectrum error after adding that")
    print("expansion order (order 0 = flat starting guess).  The fixed point")
    print("iterates the forward map directly and is exact up to tolerance,")
    print("at the cost of dozens of series evaluations instead of one.")


if __name__ == "__main__":
    main()
