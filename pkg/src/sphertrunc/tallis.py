"""The degenerate (equal-eigenvalue) limit of spherical truncation.

When every eigenvalue equals ``lambda_tilde``, the ball-truncated second
moments collapse to chi-square CDF ratios, the truncation map becomes the
scalar map ``T(l) = l * F_{v+2}(rho/l) / F_v(rho/l)``, and every derivative of
the moment integrals is a finite signed combination of CDFs one rung up the
dof ladder.  This module implements that limit: the CDF ladder, the moment
integrals and their derivatives (two independent routes), the scalar map and
its inverse, and the truncation Jacobian with its closed-form determinant and
inverse.
"""
from __future__ import annotations

import math
import warnings
from collections import Counter
from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy.optimize import brentq

from .combinatorics import c_coeff_closed, delta_from_indices
from .errors import DomainError, IllConditionedWarning, NumericError
from .specfun import chi2_cdf, chi2_pdf, double_factorial, stirling_first_unsigned

__all__ = [
    "TallisPoint",
    "CdfLadder",
    "tallis_alpha",
    "tallis_derivative",
    "tallis_derivative_via_operator",
    "tallis_map",
    "tallis_map_derivative",
    "tallis_upper_bound",
    "tallis_inverse",
    "jacobian",
    "jacobian_det",
    "jacobian_det_lower_bound",
    "jacobian_inverse",
    "jacobian_inverse_apply",
]


class CdfLadder:
    """Cache of the chi-square CDF ladder F_{v + 2j}(x) at fixed (v, x).

    Also exposes the two ratios that control the truncation Jacobian and the
    slope of the scalar truncation map.
    """

    def __init__(self, v, x):
        if v < 1 or int(v) != v:
            raise DomainError(f"dimension v must be a positive integer, got {v!r}")
        if x <= 0.0:
            raise DomainError("CDF ladder needs x > 0")
        self.v = int(v)
        self.x = float(x)
        self._cdf = {}

    def cdf(self, j):
        """F_{v + 2j}(x) for integer rung j >= 0."""
        if j not in self._cdf:
            self._cdf[j] = chi2_cdf(self.v + 2 * j, self.x)
        return self._cdf[j]

    def ratio(self, key):
        """Value of a canonical CDF-ratio key at this ladder point."""
        num = 1.0
        for off in key.offsets:
            num *= self.cdf(off // 2)
        return num / self.cdf(0) ** key.power

    @property
    def a(self):
        """F_{v+4}/F_v — the off-diagonal-free part of the Jacobian."""
        return self.cdf(2) / self.cdf(0)

    @property
    def b(self):
        """(F_{v+2}/F_v)^2 — the rank-one part's companion ratio."""
        return (self.cdf(1) / self.cdf(0)) ** 2

    @property
    def map_slope(self):
        """Slope of the scalar truncation map, ((v+2)a - v b)/2.

        Equals the row sum of the truncation Jacobian (every row), i.e. the
        Jacobian eigenvalue along the all-ones direction.
        """
        return 0.5 * ((self.v + 2) * self.a - self.v * self.b)


@dataclass(frozen=True)
class TallisPoint:
    """A degenerate truncation configuration: dimension, common eigenvalue,
    squared truncation radius."""

    v: int
    lambda_tilde: float
    rho: float

    def __post_init__(self):
        if self.v < 1 or int(self.v) != self.v:
            raise DomainError(f"dimension v must be a positive integer, got {self.v!r}")
        if not self.lambda_tilde > 0.0:
            raise DomainError("lambda_tilde must be positive")
        if not self.rho > 0.0:
            raise DomainError("rho must be positive")

    @property
    def x(self):
        return self.rho / self.lambda_tilde

    @cached_property
    def ladder(self):
        return CdfLadder(self.v, self.x)


def _check_indices(point, indices, what):
    for k in indices:
        if k < 0 or k >= point.v or int(k) != k:
            raise DomainError(f"{what} index {k!r} outside 0..{point.v - 1}")


def tallis_alpha(point, indices=()):
    """Ball-truncated Gaussian moment of prod x_k^2 (one factor per index
    occurrence) at the degenerate point, normalized by the eigenvalue powers.

    Reduces to ``delta * F_{v+2n}(x)`` with n the multiset size and delta the
    product of odd double factorials of the index multiplicities.
    """
    _check_indices(point, indices, "integrand")
    n = len(indices)
    return delta_from_indices(indices) * point.ladder.cdf(n)


def tallis_derivative(point, deriv, integrand=()):
    """Mixed partial derivative of a truncated moment at the degenerate point.

    ``deriv`` is the multiset of differentiation directions (m of them),
    ``integrand`` the multiset of integrand indices (n of them).  The value is
    the finite ladder sum

        delta(deriv + integrand) / (2 lambda)^m
            * sum_j (-1)^(m-j) C(m, j) F_{v + 2(j + n)}(x).
    """
    _check_indices(point, deriv, "derivative")
    _check_indices(point, integrand, "integrand")
    m = len(deriv)
    n = len(integrand)
    if m == 0:
        return tallis_alpha(point, integrand)
    delta = delta_from_indices(tuple(deriv) + tuple(integrand))
    lad = point.ladder
    acc = 0.0
    for j in range(m + 1):
        acc += (-1) ** (m - j) * math.comb(m, j) * lad.cdf(j + n)
    return delta * acc / (2.0 * point.lambda_tilde) ** m


def tallis_derivative_via_operator(point, deriv, integrand=()):
    """Same derivative through the Stirling-number operator route.

    Only meaningful when all derivative directions and all integrand indices
    coincide (repeated single direction): the m-fold plain derivative is
    rewritten in powers of the scaled Euler operator via unsigned Stirling
    numbers of the first kind, and each operator power moves the integrand up
    the ladder with the exact integer c-coefficients.  Kept as an independent
    route for cross-validation.
    """
    _check_indices(point, deriv, "derivative")
    _check_indices(point, integrand, "integrand")
    m = len(deriv)
    n = len(integrand)
    if m == 0:
        return tallis_alpha(point, integrand)
    if len(set(deriv) | set(integrand)) > 1:
        raise DomainError(
            "operator route applies to a single repeated direction; "
            "use tallis_derivative for mixed index sets"
        )
    lad = point.ladder
    acc = 0.0
    for j in range(1, m + 1):
        inner = 0.0
        for r in range(j + 1):
            inner += (
                (-1) ** (j - r)
                * c_coeff_closed(j, r, n)
                * double_factorial(2 * (n + r) - 1)
                * lad.cdf(n + r)
            )
        acc += (-1) ** (m - j) / 2.0**j * stirling_first_unsigned(m, j) * inner
    return acc / point.lambda_tilde**m


def tallis_map(point):
    """Scalar truncation map: common truncated eigenvalue of the degenerate
    configuration, ``lambda_tilde * F_{v+2}(x) / F_v(x)``."""
    lad = point.ladder
    return point.lambda_tilde * lad.cdf(1) / lad.cdf(0)


def tallis_map_derivative(point):
    """d(scalar map)/d(lambda_tilde), evaluated through the CDF ladder."""
    return point.ladder.map_slope


def tallis_upper_bound(v, rho):
    """Supremum of the scalar truncation map: rho / (v + 2)."""
    if v < 1 or int(v) != v:
        raise DomainError(f"dimension v must be a positive integer, got {v!r}")
    if not rho > 0.0:
        raise DomainError("rho must be positive")
    return rho / (v + 2.0)


def tallis_inverse(mu_tilde, rho, v, rtol=1e-12):
    """Invert the scalar truncation map.

    Valid for 0 < mu_tilde < rho/(v+2); the map is strictly increasing with
    that open interval as its range, so a bracketed root find is safe.  Within
    1e-9 (relative) of the upper bound an :class:`IllConditionedWarning` is
    emitted, because the map flattens exponentially there.
    """
    bound = tallis_upper_bound(v, rho)
    if not 0.0 < mu_tilde < bound:
        raise DomainError(
            f"mu_tilde={mu_tilde!r} outside the invertible range "
            f"(0, rho/(v+2)) = (0, {bound!r})"
        )
    if bound - mu_tilde < 1e-9 * bound:
        warnings.warn(
            f"mu_tilde within 1e-9 of the upper bound rho/(v+2)={bound!r}; "
            "the inverse is ill-conditioned",
            IllConditionedWarning,
            stacklevel=2,
        )

    def gap(l):
        return tallis_map(TallisPoint(v, l, rho)) - mu_tilde

    # map value < lambda always, so lambda* > mu_tilde: grow an upper bracket
    lo = mu_tilde
    hi = 2.0 * mu_tilde
    for _ in range(2000):
        if gap(hi) > 0.0:
            break
        lo = hi
        hi *= 2.0
    else:
        raise NumericError(
            f"could not bracket the scalar-map inverse (mu_tilde={mu_tilde}, "
            f"rho={rho}, v={v}); the target is too close to the bound"
        )
    root = brentq(gap, lo, hi, xtol=1e-300, rtol=8.9e-16, maxiter=200)
    resid = abs(gap(root))
    if resid > rtol * mu_tilde:
        raise NumericError(
            f"scalar-map inverse residual {resid:.3e} exceeds {rtol:.1e} "
            f"relative (mu_tilde={mu_tilde}, rho={rho}, v={v})"
        )
    return root


def _map_slope_from_densities(point):
    """Scalar-map slope rewritten with chi-square densities (test route)."""
    lad = point.ladder
    x = point.x
    f0 = chi2_pdf(point.v, x)
    f1 = chi2_pdf(point.v + 2, x)
    F0 = lad.cdf(0)
    F1 = lad.cdf(1)
    return F1 / F0 - x * (f1 * F0 - F1 * f0) / F0**2


def jacobian(point):
    """Dense truncation Jacobian at the degenerate point:
    ``a I + ((a - b)/2) * ones ones^T`` with the ladder ratios a, b."""
    lad = point.ladder
    v = point.v
    off = 0.5 * (lad.a - lad.b)
    return lad.a * np.eye(v) + off * np.ones((v, v))


def jacobian_det(v, x):
    """Closed-form determinant: a^(v-1) * ((v/2 + 1) a - (v/2) b)."""
    lad = CdfLadder(v, x)
    return lad.a ** (v - 1) * ((v / 2.0 + 1.0) * lad.a - (v / 2.0) * lad.b)


def jacobian_det_lower_bound(v, x):
    """Strict lower bound (2/(v+4)) a^(v-1) b implied by the ladder's
    log-concavity in the dof; the determinant never vanishes on x > 0."""
    lad = CdfLadder(v, x)
    return 2.0 / (v + 4.0) * lad.a ** (v - 1) * lad.b


def check_jacobian_conditioning(ladder, where=""):
    """Refuse to invert a numerically singular truncation Jacobian.

    The Jacobian is symmetric with eigenvalues ``a`` (multiplicity v-1) and
    ``map_slope``; inversion is meaningful iff both are positive and of
    comparable magnitude.  The determinant itself is no measure of that: at
    deep truncation every eigenvalue shrinks like x^2 together, the
    determinant underflows, and the inverse is still perfectly accurate.
    """
    if not ladder.cdf(0) > 0.0:
        raise NumericError(
            f"chi-square CDF underflowed to zero at v={ladder.v}, x={ladder.x:.3g}; "
            "the truncation Jacobian carries no information there" + where
        )
    lo = min(ladder.a, ladder.map_slope)
    hi = max(ladder.a, ladder.map_slope)
    if not (lo > 0.0 and np.isfinite(hi)) or lo < 1e-14 * hi:
        raise NumericError(
            "truncation Jacobian numerically singular: eigenvalues "
            f"{ladder.a:.3e} (diagonal) and {ladder.map_slope:.3e} (uniform)" + where
        )


def jacobian_inverse(v, x):
    """Dense inverse of the truncation Jacobian.

    Sherman-Morrison on the rank-one form:
    ``(1/a) I - ((a - b)/(a d)) ones ones^T`` with d = (v+2)a - vb, so every
    row sums to 2/d.  Raises :class:`NumericError` when the two Jacobian
    eigenvalues are not both positive and within fourteen orders of magnitude
    of each other; a tiny determinant alone is harmless.
    """
    lad = CdfLadder(v, x)
    check_jacobian_conditioning(lad, f" (v={v}, x={x})")
    dee = 2.0 * lad.map_slope
    coef = (lad.a - lad.b) / (lad.a * dee)
    return np.eye(v) / lad.a - coef * np.ones((v, v))


def jacobian_inverse_apply(ladder, vec):
    """Apply the Jacobian inverse to a vector in O(v) using the rank-one
    structure (no dense matrix)."""
    vec = np.asarray(vec, dtype=float)
    dee = 2.0 * ladder.map_slope
    return vec / ladder.a - (ladder.a - ladder.b) / (ladder.a * dee) * vec.sum()
