"""Shared fixtures and independent oracles for the test suite."""
from __future__ import annotations

import numpy as np
import pytest


@pytest.fixture
def lam_example():
    """The reference spectrum used throughout the narrative checks."""
    return np.array([0.1, 0.3, 0.8, 2.2])


def quad_chi2_cdf(dof, x):
    """Chi-square CDF by direct quadrature of the density (independent of
    the incomplete-gamma route used by the package).  tanh-sinh quadrature
    absorbs the integrable endpoint singularity at t = 0 for dof = 1."""
    import mpmath

    with mpmath.workdps(30):
        half = mpmath.mpf(dof) / 2

        def density(t):
            return t ** (half - 1) * mpmath.e ** (-t / 2) / (
                2**half * mpmath.gamma(half)
            )

        return float(mpmath.quad(density, [0, x]))


def mc_weighted_cdf(weights, rho, dofs, n_samples, seed):
    """Monte Carlo estimate of P(sum_j w_j * chi2(h_j) <= rho) with its
    standard error."""
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(seed)))
    weights = np.asarray(weights, dtype=float)
    dofs = np.asarray(dofs, dtype=int)
    total = np.zeros(n_samples)
    for w, h in zip(weights, dofs):
        total += w * rng.standard_normal((n_samples, h)).__pow__(2).sum(axis=1)
    hits = total <= rho
    p = hits.mean()
    se = np.sqrt(max(p * (1 - p), 1e-12) / n_samples)
    return p, se
