#!/usr/bin/env python3
"""Numerical evidence for the two open positivity conjectures.

Neither statement has a proof; the library treats both as empirical
properties and this script gathers the supporting numbers.

1. The chi-square-ratio combination controlling the sign of the
   second-order spectrum correction is conjectured nonnegative.  We scan it
   over a dimension/depth grid and report the most negative value found.

2. For a ball-conditioned Gaussian, the variance of each squared coordinate
   is conjectured to dominate the summed absolute covariances with the other
   squared coordinates (diagonal dominance of the conditional second-moment
   fluctuations).  We Monte Carlo random low-dimensional instances and
   report the worst margin in units of its statistical error.
"""
import numpy as np

from sphertrunc.perturb import xi

RNG = np.random.Generator(np.random.Philox(np.random.SeedSequence(2024)))


def scan_ratio_combination():
    print("ratio-combination scan (conjectured >= 0):")
    xs = np.geomspace(0.1, 50.0, 400)
    overall = np.inf
    for v in range(3, 8):
        vals = np.array([xi(v, float(x)) for x in xs])
        i = int(np.argmin(vals))
        overall = min(overall, vals[i])
        print(f"  v = {v}: min = {vals[i]:+.3e} at x = {xs[i]:.3f} "
              f"(max = {vals.max():+.3e})")
    print(f"  grid minimum {overall:+.3e} -- no negative dip beyond roundoff")
    print()


def dominance_margin(lam, rho, n_samples=400_000, batches=20):
    """Worst diagonal-dominance margin of the ball-conditioned squared
    coordinates, in units of its batch-estimated standard error."""
    v = lam.size
    x = RNG.standard_normal((n_samples, v)) * np.sqrt(lam)
    kept = x[(x**2).sum(axis=1) < rho] ** 2
    m = kept.shape[0]
    if m < batches * 50:
        return None, m
    per_batch = []
    for chunk in np.array_split(kept, batches):
        c = np.cov(chunk.T)
        per_batch.append(
            [c[k, k] - sum(abs(c[i, k]) for i in range(v) if i != k)
             for k in range(v)]
        )
    per_batch = np.array(per_batch)  # (batches, v)
    means = per_batch.mean(axis=0)
    ses = per_batch.std(axis=0, ddof=1) / np.sqrt(batches)
    z = means / ses
    worst = int(np.argmin(z))
    return float(z[worst]), m


def spot_check_dominance(instances=20):
    print(f"conditional diagonal-dominance spot check ({instances} instances):")
    worst_overall = np.inf
    holds = 0
    for i in range(instances):
        v = int(RNG.integers(2, 5))
        lam = np.sort(RNG.uniform(0.1, 3.0, v))
        rho = float(RNG.uniform(0.5, 4.0) * lam.sum())
        z, m = dominance_margin(lam, rho)
        if z is None:
            print(f"  [{i:2d}] v={v} skipped (only {m} kept samples)")
            continue
        verdict = "ok" if z > -2.0 else "VIOLATION?"
        holds += z > -2.0
        worst_overall = min(worst_overall, z)
        print(f"  [{i:2d}] v={v} rho={rho:6.2f} kept={m:6d} "
              f"worst margin = {z:+7.2f} se  {verdict}")
    print(f"  dominance held (within 2 se) on {holds} instances; "
          f"worst margin {worst_overall:+.2f} se")


def main():
    scan_ratio_combination()
    spot_check_dominance()


if __name__ == "__main__":
    main()
