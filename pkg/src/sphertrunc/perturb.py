"""Perturbative inversion of the truncation map about the degenerate limit.

The truncated moments are split as mu = mu_tilde + corrections; the
eigenvalues are expanded in the same bookkeeping parameter; matching order by
order turns inversion into repeated application of the (rank-one-structured)
Jacobian inverse to source vectors built from the embedded coefficient
tables.  Orders 1 and 2 also have standalone closed forms used for
cross-validation, and the whole pipeline is wrapped by :func:`reconstruct`.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from . import tables
from .errors import DomainError, UnsupportedConfigError
from .forward import domain_check, validate_spectrum
from .tallis import (
    CdfLadder,
    check_jacobian_conditioning,
    jacobian_inverse_apply,
    tallis_inverse,
)

__all__ = [
    "choose_mu_tilde",
    "split_mu",
    "zeta_structures",
    "ExpansionState",
    "prepare_state",
    "g_vector",
    "solve_order",
    "lambda1_closed_form",
    "lambda2_closed_form",
    "xi",
    "ReconstructionResult",
    "reconstruct",
    "MAX_ORDER",
]

MAX_ORDER = 4
_SCHEMES = ("concentrate", "log-spread")


def choose_mu_tilde(mu, policy="mean"):
    """Pick the degenerate reference moment: the spectrum mean, or an explicit
    positive value passed as the policy."""
    mu = validate_spectrum(mu, "mu")
    if isinstance(policy, str):
        if policy != "mean":
            raise DomainError(f"unknown mu_tilde policy {policy!r}")
        return float(mu.mean())
    value = float(policy)
    if not value > 0.0:
        raise DomainError("explicit mu_tilde must be positive")
    return value


def split_mu(mu, mu_tilde, scheme="concentrate", max_order=MAX_ORDER):
    """Distribute the gap mu - mu_tilde over expansion orders.

    "concentrate" puts the whole gap at first order (higher orders zero);
    "log-spread" assigns order n the coefficient log(1 + gap)^n / n!, whose
    partial sums converge to the gap geometrically in the log variable.
    """
    mu = validate_spectrum(mu, "mu")
    if scheme not in _SCHEMES:
        raise DomainError(f"unknown splitting scheme {scheme!r}; choose from {_SCHEMES}")
    if max_order < 1 or max_order > MAX_ORDER:
        raise DomainError(f"max_order must be 1..{MAX_ORDER}")
    gap = mu - mu_tilde
    if scheme == "concentrate":
        out = [gap] + [np.zeros_like(mu) for _ in range(max_order - 1)]
        return out
    if np.any(gap <= -1.0):
        raise DomainError("log-spread needs mu_k - mu_tilde > -1 for every component")
    lg = np.log1p(gap)
    return [lg**n / math.factorial(n) for n in range(1, max_order + 1)]


def zeta_structures(coeffs):
    """Spectrum-wide sums of products of coefficient vectors, keyed by the
    participating orders (see :func:`sphertrunc.tables.zeta_values`)."""
    return tables.zeta_values([np.asarray(c, float) for c in coeffs])


@dataclass
class ExpansionState:
    """Working state of a perturbative inversion.

    ``mu_coeffs`` holds the splitting of the moment gap (orders 1..max);
    ``lam_coeffs`` grows as orders are solved.  The CDF ladder at
    x = rho / lambda_tilde is shared by every order.
    """

    v: int
    rho: float
    mu: np.ndarray
    mu_tilde: float
    lambda_tilde: float
    scheme: str
    mu_coeffs: list
    lam_coeffs: list = field(default_factory=list)

    def __post_init__(self):
        self.ladder = CdfLadder(self.v, self.rho / self.lambda_tilde)

    @property
    def x(self):
        return self.rho / self.lambda_tilde

    def zetas(self):
        return tables.zeta_values(self.lam_coeffs)

    def first_order_centered(self, tol=1e-12):
        """Whether sum lambda^(1) vanishes (the mean-policy invariant)."""
        if not self.lam_coeffs:
            raise DomainError("first order not solved yet")
        l1 = self.lam_coeffs[0]
        return abs(l1.sum()) <= tol * np.abs(l1).sum()


def prepare_state(mu, rho, order=MAX_ORDER, scheme="concentrate", mu_tilde="mean"):
    """Build an :class:`ExpansionState` (no orders solved yet)."""
    mu = validate_spectrum(mu, "mu")
    if order < 1 or order > MAX_ORDER:
        raise DomainError(f"expansion order must be 1..{MAX_ORDER}, got {order}")
    mt = choose_mu_tilde(mu, mu_tilde)
    lt = tallis_inverse(mt, rho, mu.size)
    return ExpansionState(
        v=mu.size,
        rho=float(rho),
        mu=mu,
        mu_tilde=mt,
        lambda_tilde=lt,
        scheme=scheme,
        mu_coeffs=split_mu(mu, mt, scheme=scheme, max_order=order),
    )


def _mu_coeff(state, n):
    if n <= len(state.mu_coeffs):
        return state.mu_coeffs[n - 1]
    return np.zeros(state.v)


def g_vector(n, state):
    """Order-n source vector: the part of the order-n matching condition not
    proportional to the unknown lambda^(n).

    Order 1 is just the first-order moment coefficient; orders 2..4 add the
    table-driven structure/ratio combination scaled by lambda_tilde^(1-n).
    Orders >= 3 require a centered first-order coefficient (the shipped
    tables assume it).
    """
    if n < 1 or n > MAX_ORDER:
        raise DomainError(f"order must be 1..{MAX_ORDER}, got {n}")
    if len(state.lam_coeffs) < n - 1:
        raise DomainError(
            f"order-{n} source needs orders 1..{n - 1} solved, "
            f"have {len(state.lam_coeffs)}"
        )
    if n == 1:
        return _mu_coeff(state, 1).copy()
    if n >= 3 and not state.first_order_centered():
        raise UnsupportedConfigError(
            "third- and fourth-order coefficient tables assume the first-order "
            "correction sums to zero; use the mean mu_tilde policy with the "
            "concentrate splitting"
        )
    table = tables.GAMMA_TABLES[n]
    coeffs = state.lam_coeffs[: n - 1]
    zetas = tables.zeta_values(coeffs)
    out = np.zeros(state.v)
    for key in table.ratio_keys:
        col = table.column(key)
        coef = np.zeros(state.v)
        for struct, gam in zip(table.structures, col):
            if gam == 0:
                continue
            coef += float(gam) * tables.structure_values(
                struct, state.lambda_tilde, coeffs, zetas
            )
        out += coef * state.ladder.ratio(key)
    out *= state.lambda_tilde ** (1 - n)
    return out + _mu_coeff(state, n)


def solve_order(n, state):
    """Solve the order-n matching condition for lambda^(n) via the rank-one
    Jacobian inverse.  Does not mutate the state."""
    g = g_vector(n, state)
    lad = state.ladder
    check_jacobian_conditioning(lad, f" at x={state.x:.4g}")
    return jacobian_inverse_apply(lad, g)


def lambda1_closed_form(state):
    """First-order coefficient in closed form:
    (F_v/F_{v+4}) (mu_k - mean mu) + (2/d)(mean mu - mu_tilde)."""
    if state.scheme != "concentrate":
        raise UnsupportedConfigError("closed forms assume the concentrate splitting")
    lad = state.ladder
    dee = 2.0 * lad.map_slope
    mu_bar = state.mu.mean()
    return (state.mu - mu_bar) / lad.a + 2.0 / dee * (mu_bar - state.mu_tilde)


def lambda2_closed_form(state):
    """Second-order coefficient in closed form (mean policy):
    per-component square term plus a uniform shift proportional to xi."""
    if state.scheme != "concentrate":
        raise UnsupportedConfigError("closed forms assume the concentrate splitting")
    if abs(state.mu_tilde - state.mu.mean()) > 1e-12 * abs(state.mu_tilde):
        raise UnsupportedConfigError(
            "the second-order closed form assumes mu_tilde = mean(mu)"
        )
    l1 = state.lam_coeffs[0] if state.lam_coeffs else lambda1_closed_form(state)
    lad = state.ladder
    lt = state.lambda_tilde
    dee = 2.0 * lad.map_slope
    z11 = float((l1**2).sum())
    return l1**2 / lt * (1.0 - lad.cdf(3) / lad.cdf(2)) + z11 / (2.0 * lt) / dee * xi(
        state.v, state.x
    )


def xi(v, x):
    """Ladder combination controlling the uniform part of the second-order
    coefficient; conjectured nonnegative for all v >= 1, x > 0."""
    lad = CdfLadder(v, x)
    r1 = lad.cdf(1) / lad.cdf(0)
    return lad.cdf(3) / lad.cdf(0) + lad.cdf(2) * lad.cdf(1) / lad.cdf(0) ** 2 - 2.0 * (
        lad.cdf(3) / lad.cdf(2)
    ) * r1**2


@dataclass
class ReconstructionResult:
    """Outcome of a perturbative reconstruction.

    ``partial_sums[n]`` is the order-n estimate (n = 0 is the flat degenerate
    seed); ``lambda_hat`` is the highest-order one.  ``warnings`` collects
    advisory findings (domain-screen failure, negative components);
    ``diagnostics`` carries the scalar quantities a caller might log.
    """

    lambda_hat: np.ndarray
    partial_sums: list
    coeffs: list
    state: ExpansionState
    warnings: list
    diagnostics: dict


def reconstruct(
    mu,
    rho,
    order=MAX_ORDER,
    scheme="concentrate",
    mu_tilde="mean",
    with_residuals=False,
):
    """Reconstruct the original eigenvalues from truncated moments.

    Runs the degenerate seed plus ``order`` perturbative corrections.
    Negative reconstructed components are reported, never clamped.  With
    ``with_residuals=True`` the jet-assembled matching residuals of every
    solved order are attached to the diagnostics (costlier; off by default).
    """
    state = prepare_state(mu, rho, order=order, scheme=scheme, mu_tilde=mu_tilde)
    notes = []
    report = domain_check(state.mu, state.rho)
    if not report.ok:
        notes.append(
            "mu fails the necessary-condition screen; no spectrum maps onto it "
            "exactly at this rho (reconstruction continues, treat results as "
            "extrapolation)"
        )
        warnings.warn(notes[-1], stacklevel=2)

    for n in range(1, order + 1):
        state.lam_coeffs.append(solve_order(n, state))

    partial = [np.full(state.v, state.lambda_tilde)]
    for c in state.lam_coeffs:
        partial.append(partial[-1] + c)
    for n, est in enumerate(partial):
        if np.any(est <= 0.0):
            notes.append(
                f"order-{n} estimate has non-positive components "
                f"(min {est.min():.6g}); returned unclamped"
            )
            warnings.warn(notes[-1], stacklevel=2)

    diag = {
        "mu_tilde": state.mu_tilde,
        "lambda_tilde": state.lambda_tilde,
        "x": state.x,
        "det_jacobian": state.ladder.a ** (state.v - 1) * state.ladder.map_slope,
        "zetas": state.zetas(),
        "domain_report": report,
    }
    if with_residuals:
        from . import jets

        diag["residuals"] = {
            n: jets.residual(n, state) for n in range(0, order + 1)
        }
    return ReconstructionResult(
        lambda_hat=partial[-1],
        partial_sums=partial,
        coeffs=list(state.lam_coeffs),
        state=state,
        warnings=notes,
        diagnostics=diag,
    )
