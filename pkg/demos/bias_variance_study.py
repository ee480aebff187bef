#!/usr/bin/env python3
"""Small-sample behavior of the five spectrum estimators.

Draws truncated samples of growing size, applies the four expansion-order
estimators and the fixed-point reference to each replica's sample moments,
and tabulates bias and variance per eigenvalue.  Three effects to watch:

* variance scales like 1/N for every estimator (straight-line fits below);
* at the top of the spectrum the fixed point pays for its exactness with
  noticeably more variance than the low-order estimators (it chases every
  wiggle of the sampled moments), while at the bottom the ordering flips;
* as N grows, each expansion estimator's bias settles onto its intrinsic
  bias - the error it would make on perfectly measured moments.
"""
import warnings

import numpy as np

from sphertrunc.simulate import bias_variance_sweep, intrinsic_bias, variance_fits

LAM = np.array([0.1, 0.3, 0.8, 2.2])
RHO = 6.0


def main():
    # At this truncation depth the crude first-order estimate of the smallest
    # eigenvalue dips below zero on some replicas; the sweep handles that and
    # the repeated per-replica warning adds nothing here.
    warnings.filterwarnings("ignore", message="order-1 estimate has non-positive")
    print(f"population spectrum {LAM}, rho = {RHO}, 120 replicas per cell")
    res = bias_variance_sweep(
        LAM, [RHO], [200, 400, 800, 1600], replicas=120, seed=5
    )
    if res.failures:
        for (rho, n, est), count in sorted(res.failures.items()):
            print(f"  note: {count} replica(s) unusable for {est} at N={n}")
    recs = {(r.n_samples, r.estimator, r.component): r for r in res.records}

    print()
    print("variance of the top-eigenvalue estimate (x1000):")
    ests = ("order-1", "order-2", "order-3", "order-4", "iterative")
    print(f"{'N':>6}" + "".join(f"{e:>11}" for e in ests))
    for n in (200, 400, 800, 1600):
        row = [recs[(n, e, 3)].variance * 1e3 for e in ests]
        print(f"{n:>6}" + "".join(f"{v:11.2f}" for v in row))

    print()
    print("variance-vs-1/N straight-line fits (top eigenvalue):")
    for f in variance_fits(res.records):
        if f["component"] == 3:
            print(f"  {f['estimator']:>10}: slope {f['slope']:.3f}, "
                  f"intercept {f['intercept']:+.2e}, R^2 = {f['r_squared']:.3f}")

    print()
    ib = intrinsic_bias(LAM, RHO)
    print("bias of the top-eigenvalue estimate vs the intrinsic bias:")
    print(f"{'estimator':>10} {'bias@N=1600':>12} {'intrinsic':>12}")
    for e in ests:
        print(f"{e:>10} {recs[(1600, e, 3)].bias:12.4f} {ib[e][3]:12.4f}")
    print()
    print("(the fixed point has essentially zero intrinsic bias; the")
    print(" expansion estimators keep a deterministic residual that higher")
    print(" orders shrink)")


if __name__ == "__main__":
    main()
