"""Fixed-point inversion of the truncation map (reference/baseline solver).

Rearranging ``mu_k = lambda_k alpha_k / alpha`` suggests iterating
``lambda_k <- mu_k alpha / alpha_k`` from the truncated moments themselves.
No convergence theory is claimed; in practice the iteration contracts for the
radii of interest and slows as truncation deepens.  Convergence is declared
on the forward-map residual, so a returned spectrum is certified to map onto
``mu`` within tolerance.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, NumericError
from .forward import forward_family, validate_spectrum

__all__ = ["IterationTrace", "fixed_point_solve"]


@dataclass
class IterationTrace:
    """Per-step history of a fixed-point run."""

    residuals: list = field(default_factory=list)
    iterates: list = field(default_factory=list)
    converged: bool = False

    @property
    def steps(self):
        return len(self.residuals)


def fixed_point_solve(mu, rho, tol=1e-10, max_iter=10000, damping=1.0,
                      keep_iterates=False, cdf_tol=None):
    """Invert the truncation map by damped fixed-point iteration.

    Parameters
    ----------
    mu : array_like
        Truncated moments (all positive).
    rho : float
        Squared truncation radius.
    tol : float
        Convergence threshold on ||forward(lambda) - mu||_inf relative to
        ||mu||_inf.
    max_iter : int
        Iteration budget; exhausting it raises :class:`NumericError` with the
        trace attached as ``exc.trace``.  At step counts 64, 128, 256, ... the
        recent contraction rate is extrapolated, and a run projected to
        overshoot the remaining budget fails early with the same exception;
        moment vectors outside the image of the map (whose residual levels
        off above zero while the top iterate grows without bound) are thereby
        rejected after ~100 steps instead of a full, increasingly expensive
        sweep to ``max_iter``.
    damping : float
        Step mixing in (0, 1]; 1 is the plain update.
    keep_iterates : bool
        Store every iterate in the trace (memory-heavy for long runs).
    cdf_tol : float, optional
        Series tolerance for the forward evaluations; defaults to tol/100.

    Returns
    -------
    (lam, trace) : (ndarray, IterationTrace)
    """
    mu = validate_spectrum(mu, "mu")
    if not rho > 0.0:
        raise DomainError("rho must be positive")
    if not 0.0 < damping <= 1.0:
        raise DomainError("damping must lie in (0, 1]")
    if cdf_tol is None:
        cdf_tol = max(tol * 1e-2, 1e-13)
    scale = np.abs(mu).max()
    lam = mu.copy()
    trace = IterationTrace()
    checkpoint = 64
    for _ in range(max_iter):
        a, aks = forward_family(rho, lam, tol=cdf_tol)
        resid = float(np.abs(lam * aks / a - mu).max())
        if not np.isfinite(resid):
            err = NumericError(
                "forward residual became non-finite; the iteration diverged"
            )
            err.trace = trace
            raise err
        trace.residuals.append(resid)
        if keep_iterates:
            trace.iterates.append(lam.copy())
        if resid <= tol * scale:
            trace.converged = True
            return lam, trace
        if trace.steps == checkpoint:
            half = trace.residuals[checkpoint // 2 - 1]
            rate = (resid / half) ** (2.0 / checkpoint)
            projected = (
                math.inf
                if rate >= 1.0
                else math.log(tol * scale / resid) / math.log(rate)
            )
            if projected > max_iter - trace.steps:
                err = NumericError(
                    f"convergence projected to exceed the iteration budget "
                    f"(residual {resid:.3e} after {trace.steps} steps, "
                    f"contraction rate ~{min(rate, 9.99):.4f}); the moments "
                    f"may lie outside the image of the truncation map"
                )
                err.trace = trace
                raise err
            checkpoint *= 2
        update = mu * a / aks
        lam = (1.0 - damping) * lam + damping * update
    err = NumericError(
        f"fixed point did not reach tol={tol} in {max_iter} iterations "
        f"(last residual {trace.residuals[-1]:.3e})"
    )
    err.trace = trace
    raise err
