"""Sample-space study: bias and variance of spectrum estimators.

Draws diagonal-Gaussian populations, truncates to the ball, estimates the
truncated moments from the surviving sample, and pushes them through the
perturbative estimators (orders 1..4) and the fixed-point baseline.  Replica
batches produce bias/variance records per estimator and eigenvalue, with a
standard error on the variance estimate and straight-line fits of variance
against 1/N.
"""
from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, NumericError
from .forward import forward_map, validate_spectrum
from .iterative import fixed_point_solve
from .perturb import MAX_ORDER, reconstruct

__all__ = [
    "ESTIMATORS",
    "sample_truncated_covariance",
    "stderr_of_variance",
    "SimulationRecord",
    "SweepResult",
    "bias_variance_sweep",
    "variance_fits",
    "intrinsic_bias",
]

ESTIMATORS = ("iterative", "order-1", "order-2", "order-3", "order-4")


def sample_truncated_covariance(lam, rho, n, seed):
    """Eigenvalues (ascending) of the sample covariance of the ball-truncated
    part of an n-draw diagonal-Gaussian sample, and the surviving count.

    The covariance uses the truncated-sample mean and the 1/(M-1)
    normalization.  Fewer than two survivors is an error.
    """
    lam = validate_spectrum(lam)
    if not rho > 0.0:
        raise DomainError("rho must be positive")
    if n < 2:
        raise DomainError("need n >= 2 draws")
    rng = np.random.Generator(np.random.Philox(_as_seedseq(seed)))
    x = rng.standard_normal((n, lam.size)) * np.sqrt(lam)
    kept = x[(x**2).sum(axis=1) < rho]
    m = kept.shape[0]
    if m < 2:
        raise NumericError(f"only {m} of {n} draws landed in the ball")
    centered = kept - kept.mean(axis=0)
    cov = centered.T @ centered / (m - 1)
    return np.linalg.eigvalsh(cov), m


def _as_seedseq(seed):
    if isinstance(seed, np.random.SeedSequence):
        return seed
    return np.random.SeedSequence(seed)


def stderr_of_variance(samples):
    """Standard error of a sample variance:
    var * sqrt(2/(R-1) + kappa/R) with kappa the sample excess kurtosis."""
    samples = np.asarray(samples, dtype=float)
    r = samples.size
    if r < 4:
        raise DomainError("kurtosis (and hence the stderr) needs at least 4 samples")
    var = samples.var(ddof=1)
    m2 = samples.var()
    if m2 == 0.0:
        return 0.0
    kappa = ((samples - samples.mean()) ** 4).mean() / m2**2 - 3.0
    return float(var * np.sqrt(2.0 / (r - 1) + kappa / r))


@dataclass(frozen=True)
class SimulationRecord:
    """One (configuration, estimator, eigenvalue) cell of a sweep."""

    rho: float
    n_samples: int
    replicas: int
    estimator: str
    component: int
    bias: float
    variance: float
    stderr_variance: float
    mean_kept: float

    FIELDS = (
        "rho",
        "n_samples",
        "replicas",
        "estimator",
        "component",
        "bias",
        "variance",
        "stderr_variance",
        "mean_kept",
    )


@dataclass
class SweepResult:
    """Records plus bookkeeping of excluded replicas per configuration."""

    records: list
    failures: dict  # (rho, n_samples, estimator) -> count
    lam: np.ndarray
    seed: int
    estimators: tuple


def _estimate_replica(args):
    lam, rho, n, seed_key, estimators, solver_tol, solver_max_iter = args
    try:
        mu_hat, m = sample_truncated_covariance(
            lam, rho, n, np.random.SeedSequence(seed_key)
        )
    except NumericError:
        return None, {e: None for e in estimators}
    out = {}
    max_order = max(
        (int(e.split("-")[1]) for e in estimators if e.startswith("order-")),
        default=0,
    )
    if max_order:
        try:
            import warnings as _w

            with _w.catch_warnings():
                _w.simplefilter("ignore")
                rec = reconstruct(mu_hat, rho, order=max_order)
            for e in estimators:
                if e.startswith("order-"):
                    out[e] = rec.partial_sums[int(e.split("-")[1])]
        except (DomainError, NumericError):
            for e in estimators:
                if e.startswith("order-"):
                    out[e] = None
    if "iterative" in estimators:
        try:
            lam_it, _ = fixed_point_solve(
                mu_hat, rho, tol=solver_tol, max_iter=solver_max_iter
            )
            out["iterative"] = lam_it
        except (DomainError, NumericError):
            out["iterative"] = None
    return m, out


def bias_variance_sweep(
    lam,
    rho_list,
    n_list,
    replicas,
    seed,
    estimators=ESTIMATORS,
    threads=1,
    solver_tol=1e-9,
    solver_max_iter=2000,
):
    """Replica study of estimator bias and variance.

    For every (rho, N) pair, ``replicas`` independent truncated samples are
    drawn with per-replica counter-derived seeds, each estimator inverts the
    sampled moments, and the per-eigenvalue mean gap to the true spectrum
    (bias) and spread (variance, with its stderr) are recorded.  Replicas
    where sampling or an estimator fails are excluded for that estimator and
    counted in ``failures`` — at small N the sampled moments can land outside
    the image of the truncation map, in which case the fixed-point estimator
    has no answer and gives up after ``solver_max_iter`` steps at most.  The
    aggregation order is fixed, so results are reproducible for a given seed
    regardless of ``threads``.
    """
    lam = np.sort(validate_spectrum(lam))
    replicas = int(replicas)
    if replicas < 4:
        raise DomainError("need at least 4 replicas for variance stderr")
    if not len(rho_list) or not len(n_list):
        raise DomainError("rho_list and n_list must be nonempty")
    for e in estimators:
        if e not in ESTIMATORS:
            raise DomainError(f"unknown estimator {e!r}; choose from {ESTIMATORS}")
    v = lam.size
    records = []
    failures = {}
    for i_rho, rho in enumerate(rho_list):
        for i_n, n in enumerate(n_list):
            tasks = [
                (lam, float(rho), int(n), (int(seed), i_rho, i_n, r),
                 tuple(estimators), solver_tol, int(solver_max_iter))
                for r in range(replicas)
            ]
            if threads and threads > 1:
                with ProcessPoolExecutor(max_workers=int(threads)) as pool:
                    results = list(pool.map(_estimate_replica, tasks, chunksize=16))
            else:
                results = [_estimate_replica(t) for t in tasks]

            kept_counts = [m for m, _ in results if m is not None]
            mean_kept = float(np.mean(kept_counts)) if kept_counts else float("nan")
            for est in estimators:
                draws = [r[est] for _, r in results if r.get(est) is not None]
                n_fail = replicas - len(draws)
                if n_fail:
                    failures[(float(rho), int(n), est)] = n_fail
                if len(draws) < 4:
                    continue
                mat = np.stack(draws)  # (R_eff, v)
                for k in range(v):
                    col = mat[:, k]
                    records.append(
                        SimulationRecord(
                            rho=float(rho),
                            n_samples=int(n),
                            replicas=len(draws),
                            estimator=est,
                            component=k,
                            bias=float(col.mean() - lam[k]),
                            variance=float(col.var(ddof=1)),
                            stderr_variance=stderr_of_variance(col),
                            mean_kept=mean_kept,
                        )
                    )
    return SweepResult(
        records=records,
        failures=failures,
        lam=lam,
        seed=int(seed),
        estimators=tuple(estimators),
    )


def variance_fits(records):
    """Straight-line fits of estimator variance against 1/N.

    Returns one dict per (rho, estimator, component) with the fitted
    intercept, slope and R^2 (needs at least two distinct N values).
    """
    groups = {}
    for rec in records:
        groups.setdefault((rec.rho, rec.estimator, rec.component), []).append(rec)
    fits = []
    for (rho, est, k), recs in sorted(groups.items()):
        if len({r.n_samples for r in recs}) < 2:
            continue
        xs = np.array([1.0 / r.n_samples for r in recs])
        ys = np.array([r.variance for r in recs])
        slope, intercept = np.polyfit(xs, ys, 1)
        pred = intercept + slope * xs
        ss_res = float(((ys - pred) ** 2).sum())
        ss_tot = float(((ys - ys.mean()) ** 2).sum())
        r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
        fits.append(
            {
                "rho": rho,
                "estimator": est,
                "component": k,
                "slope": float(slope),
                "intercept": float(intercept),
                "r_squared": r2,
            }
        )
    return fits


def intrinsic_bias(lam, rho, solver_tol=1e-10):
    """Deterministic part of each estimator's bias: apply the estimator to
    the exact truncated moments and subtract the true spectrum."""
    lam = np.sort(validate_spectrum(lam))
    mu = forward_map(rho, lam, tol=1e-13)
    rec = reconstruct(mu, rho, order=MAX_ORDER)
    out = {}
    for n in range(1, MAX_ORDER + 1):
        out[f"order-{n}"] = rec.partial_sums[n] - lam
    lam_it, _ = fixed_point_solve(mu, rho, tol=solver_tol)
    out["iterative"] = lam_it - lam
    return out
