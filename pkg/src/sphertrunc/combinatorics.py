"""Exact integer coefficients for Gaussian moments and derivative ladders.

The moment coefficient of a monomial ``x_1^{2 m_1} ... x_v^{2 m_v}`` under a
centered multinormal is the product of odd double factorials
``prod_j (2 m_j - 1)!!``; the c-coefficients connect repeated single-direction
derivatives of the moment integrals to shifts of the integrand degree.  All
results are exact Python integers.
"""
from __future__ import annotations

from collections import Counter
from functools import lru_cache

from .errors import DomainError
from .specfun import double_factorial, stirling_second

__all__ = [
    "delta_from_multiplicities",
    "delta_from_indices",
    "c_coeff_nested",
    "c_coeff_closed",
]


def delta_from_multiplicities(mults):
    """Moment coefficient from per-direction even-power multiplicities.

    ``mults`` maps direction -> multiplicity m_j >= 0 (mapping or iterable of
    counts); zero multiplicities contribute the factor (-1)!! = 1.
    """
    counts = mults.values() if hasattr(mults, "values") else mults
    out = 1
    for m in counts:
        if m < 0 or int(m) != m:
            raise DomainError(f"multiplicities must be nonnegative integers, got {m!r}")
        out *= double_factorial(2 * int(m) - 1)
    return out


def delta_from_indices(indices):
    """Moment coefficient for a multiset of direction indices.

    The empty multiset gives 1 (the plain truncation probability); a single
    index gives 1!! = 1; a repeated index k appearing m times contributes
    (2m - 1)!!.
    """
    return delta_from_multiplicities(Counter(indices))


def c_coeff_nested(j, r, n):
    """Derivative-ladder coefficient c_{j,r}(n) as its defining nested sum.

    Depth j - r nested sums of the product of odd factors 2(n + l) + 1; the
    empty nest (j == r) is 1.  Exponential in depth, so only sensible for the
    small j used here; the closed form below is the production route.
    """
    _check_cjr_args(j, r, n)

    @lru_cache(maxsize=None)
    def nest(depth, ub):
        if depth == 0:
            return 1
        return sum((2 * (n + l) + 1) * nest(depth - 1, l) for l in range(ub + 1))

    return nest(j - r, r)


def c_coeff_closed(j, r, n):
    """Closed form of c_{j,r}(n) via Stirling numbers of the second kind.

    Sum over t of (-2)^(j-t) * prod_{i=r+1..t} (2(n+i) - 1) * S2(j, t) * C(t, r);
    every addend is an exact integer.
    """
    _check_cjr_args(j, r, n)
    from math import comb

    total = 0
    for t in range(r, j + 1):
        prod = 1
        for i in range(r + 1, t + 1):
            prod *= 2 * (n + i) - 1
        total += (-2) ** (j - t) * prod * stirling_second(j, t) * comb(t, r)
    return total


def _check_cjr_args(j, r, n):
    if j < 0 or r < 0 or n < 0:
        raise DomainError("c_{j,r}(n) needs j, r, n >= 0")
    if r > j:
        raise DomainError(f"c_{{j,r}} needs r <= j, got j={j} r={r}")
