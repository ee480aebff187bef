"""Scalar special functions and exact integer sequences.

Chi-square CDFs and CDF ratios, the confluent hypergeometric function M,
double factorials and both kinds of Stirling numbers.  Everything here is
deliberately small and heavily reused by the rest of the package.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.special import gammainc

from .errors import DomainError, NumericError

__all__ = [
    "chi2_cdf",
    "chi2_pdf",
    "ChiSquareRatioKey",
    "ratio_key",
    "chi2_ratio",
    "kummer_m",
    "double_factorial",
    "stirling_first_unsigned",
    "stirling_second",
]


def chi2_cdf(dof, x):
    """CDF of a central chi-square distribution with ``dof`` degrees of freedom.

    Computed as the regularized lower incomplete gamma function
    P(dof/2, x/2).  ``x`` may be a scalar or an array; negative arguments are
    rejected rather than clipped.
    """
    if dof < 1 or int(dof) != dof:
        raise DomainError(f"dof must be a positive integer, got {dof!r}")
    x = np.asarray(x, dtype=float)
    if np.any(x < 0.0):
        raise DomainError("chi2_cdf needs x >= 0")
    out = gammainc(dof / 2.0, x / 2.0)
    return float(out) if out.ndim == 0 else out


def chi2_pdf(dof, x):
    """Density of the central chi-square distribution (used by the scalar
    truncation-map derivative and the CDF-inversion fallback)."""
    if dof < 1 or int(dof) != dof:
        raise DomainError(f"dof must be a positive integer, got {dof!r}")
    x = np.asarray(x, dtype=float)
    if np.any(x < 0.0):
        raise DomainError("chi2_pdf needs x >= 0")
    from scipy.stats import chi2 as _chi2

    out = _chi2.pdf(x, dof)
    return float(out) if np.ndim(out) == 0 else out


@dataclass(frozen=True, order=True)
class ChiSquareRatioKey:
    """Canonical label for a product of chi-square CDF ratios.

    ``offsets`` lists the even dof increments of the numerator CDFs above the
    base dimension (descending); ``power`` is the exponent of the base CDF in
    the denominator.  The neutral ratio (value 1) is ``offsets=(), power=0``;
    for every ratio arising in the order-n source-term expansion,
    ``power == len(offsets)``.
    """

    offsets: tuple
    power: int

    def __post_init__(self):
        if self.power < 0 or self.power != len(self.offsets):
            raise DomainError(
                "ratio key needs power == number of numerator factors; "
                f"got offsets={self.offsets} power={self.power}"
            )
        if any(o <= 0 or o % 2 for o in self.offsets):
            raise DomainError("numerator offsets must be positive even integers")
        if tuple(sorted(self.offsets, reverse=True)) != tuple(self.offsets):
            raise DomainError("offsets must be sorted descending")

    @property
    def aggregate_offset(self):
        return sum(self.offsets)

    def label(self, v="v"):
        if not self.offsets:
            return "1"
        num = "*".join(f"F{v}+{o}" for o in self.offsets)
        den = f"F{v}" if self.power == 1 else f"F{v}^{self.power}"
        return f"{num}/{den}"


def ratio_key(offsets):
    """Build the canonical :class:`ChiSquareRatioKey` for the given numerator
    offsets (any order, zeros dropped)."""
    offs = tuple(sorted((int(o) for o in offsets if o != 0), reverse=True))
    return ChiSquareRatioKey(offs, len(offs))


def chi2_ratio(v, key, x):
    """Evaluate a CDF-ratio product at base dimension ``v`` and argument ``x``.

    Returns prod_i F_{v + offsets[i]}(x) / F_v(x)**power.  Requires x > 0 so
    the denominator cannot vanish.
    """
    if np.any(np.asarray(x) <= 0.0):
        raise DomainError("chi2_ratio needs x > 0")
    num = 1.0
    for off in key.offsets:
        num = num * chi2_cdf(v + off, x)
    return num / chi2_cdf(v, x) ** key.power


def kummer_m(a, b, z, rtol=1e-12, max_terms=10000):
    """Confluent hypergeometric function M(a, b, z) by direct power series.

    Intended for the diagnostic bounds on the scalar truncation map, where z
    is moderate (series iterates stay inside float64 range for z up to ~600).
    Stops when the running term falls below ``rtol`` relative to the partial
    sum; raises :class:`NumericError` with diagnostics if ``max_terms`` is hit.
    """
    if b <= 0 and float(b).is_integer():
        raise DomainError(f"M(a, b, z) undefined for nonpositive integer b={b}")
    if z < 0:
        raise DomainError("kummer_m expects z >= 0 at its call sites")
    total = 1.0
    term = 1.0
    for n in range(1, max_terms + 1):
        term *= (a + n - 1) / (b + n - 1) * z / n
        total += term
        if abs(term) <= rtol * abs(total) and n > z:
            return total
    raise NumericError(
        f"kummer_m series did not settle in {max_terms} terms "
        f"(a={a}, b={b}, z={z}, last term {term:.3e})"
    )


def double_factorial(n):
    """Double factorial of an odd integer, with (-1)!! = 1.

    Only odd n (or -1) occur in the moment coefficients, so even input is a
    caller bug and is rejected.
    """
    if n == -1:
        return 1
    if n < 1 or n % 2 == 0:
        raise DomainError(f"double_factorial defined for odd n >= 1 or n == -1, got {n}")
    out = 1
    while n > 1:
        out *= n
        n -= 2
    return out


@lru_cache(maxsize=None)
def stirling_first_unsigned(n, k):
    """Unsigned Stirling number of the first kind (cycle-count convention)."""
    if n < 0 or k < 0:
        raise DomainError("Stirling numbers need n, k >= 0")
    if n == 0:
        return 1 if k == 0 else 0
    if k == 0 or k > n:
        return 0
    return (n - 1) * stirling_first_unsigned(n - 1, k) + stirling_first_unsigned(n - 1, k - 1)


@lru_cache(maxsize=None)
def stirling_second(n, k):
    """Stirling number of the second kind (set-partition count)."""
    if n < 0 or k < 0:
        raise DomainError("Stirling numbers need n, k >= 0")
    if n == 0:
        return 1 if k == 0 else 0
    if k == 0 or k > n:
        return 0
    return k * stirling_second(n - 1, k) + stirling_second(n - 1, k - 1)
