"""Truncated power-series (jet) arithmetic and coefficient-table rederivation.

An :class:`EpsilonJet` carries the Taylor coefficients of a quantity in the
expansion bookkeeping parameter.  Propagating jets through the moment
integrals — whose derivatives at the degenerate point are finite CDF-ladder
sums — gives the expansion of the forward map to any supported order without
symbolic algebra.  That yields (a) an independent residual check for the
perturbative solver and (b) a from-scratch rederivation of the embedded
rational coefficient tables (:func:`extract_gamma`).
"""
from __future__ import annotations

import itertools
import math
from collections import Counter
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from . import tables
from .combinatorics import delta_from_indices
from .errors import DomainError, NumericError
from .tallis import CdfLadder

__all__ = [
    "EpsilonJet",
    "jet_alpha",
    "residual",
    "source_from_jets",
    "ExtractionResult",
    "extract_gamma_table",
    "extract_gamma",
    "compare_to_stored",
]

MAX_JET_ORDER = 4


class EpsilonJet:
    """Polynomial truncation of a power series: coefficients c_0..c_N.

    Supports +, -, *, / (division needs a nonzero constant term) and scalar
    mixing; binary operations require matching truncation orders.
    """

    __slots__ = ("coeffs",)
    __array_priority__ = 100  # keep numpy scalars from absorbing the jet

    def __init__(self, coeffs):
        arr = np.asarray(coeffs, dtype=float)
        if arr.ndim != 1 or arr.size < 1:
            raise DomainError("jet coefficients must form a nonempty 1-D array")
        if arr.size - 1 > MAX_JET_ORDER:
            raise DomainError(f"jet order capped at {MAX_JET_ORDER}")
        self.coeffs = arr

    @classmethod
    def constant(cls, value, order):
        c = np.zeros(order + 1)
        c[0] = value
        return cls(c)

    @property
    def order(self):
        return self.coeffs.size - 1

    def coeff(self, n):
        return float(self.coeffs[n])

    def _coerce(self, other):
        if isinstance(other, EpsilonJet):
            if other.order != self.order:
                raise DomainError("jet orders must match")
            return other
        if np.isscalar(other):
            return EpsilonJet.constant(float(other), self.order)
        return NotImplemented

    def __add__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return NotImplemented
        return EpsilonJet(self.coeffs + o.coeffs)

    __radd__ = __add__

    def __sub__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return NotImplemented
        return EpsilonJet(self.coeffs - o.coeffs)

    def __rsub__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return NotImplemented
        return EpsilonJet(o.coeffs - self.coeffs)

    def __neg__(self):
        return EpsilonJet(-self.coeffs)

    def __mul__(self, other):
        if np.isscalar(other):
            return EpsilonJet(self.coeffs * float(other))
        o = self._coerce(other)
        if o is NotImplemented:
            return NotImplemented
        return EpsilonJet(_convolve_trunc(self.coeffs, o.coeffs))

    __rmul__ = __mul__

    def __truediv__(self, other):
        if np.isscalar(other):
            return EpsilonJet(self.coeffs / float(other))
        o = self._coerce(other)
        if o is NotImplemented:
            return NotImplemented
        return EpsilonJet(_jet_divide(self.coeffs, o.coeffs))

    def __rtruediv__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return NotImplemented
        return EpsilonJet(_jet_divide(o.coeffs, self.coeffs))

    def __repr__(self):
        return f"EpsilonJet({self.coeffs.tolist()})"


def _convolve_trunc(a, b):
    n = a.size
    out = np.zeros(n)
    for i in range(n):
        ai = a[i]
        if ai != 0.0:
            out[i:] += ai * b[: n - i]
    return out


def _jet_divide(a, b):
    if b[0] == 0.0:
        raise DomainError("jet division needs a nonzero constant term")
    n = a.size
    out = np.empty(n)
    out[0] = a[0] / b[0]
    for i in range(1, n):
        acc = a[i]
        for j in range(1, i + 1):
            acc -= b[j] * out[i - j]
        out[i] = acc / b[0]
    return out


def _ladder_values(v, x, count):
    lad = CdfLadder(v, x)
    return np.array([lad.cdf(j) for j in range(count)])


def _binomial_ladder_sum(F, m, n_int):
    """sum_j (-1)^(m-j) C(m,j) F[j + n_int] — the ladder part of an m-fold
    derivative of an integrand n_int rungs up."""
    return sum((-1) ** (m - j) * math.comb(m, j) * F[j + n_int] for j in range(m + 1))


def _jet_alpha_from_values(lam_jets, v, integrand, F):
    """Jet of a truncated moment, with explicit ladder values F (so the same
    code serves real CDFs and the synthetic ladders used in extraction)."""
    order = lam_jets[0].order
    ltil = lam_jets[0].coeff(0)
    n_int = len(integrand)
    total = np.zeros(order + 1)
    total[0] = delta_from_indices(integrand) * F[n_int]
    deltas = [j.coeffs.copy() for j in lam_jets]
    for d in deltas:
        d[0] = 0.0
    for m in range(1, order + 1):
        pref = _binomial_ladder_sum(F, m, n_int) / (2.0 * ltil) ** m
        for ms in itertools.combinations_with_replacement(range(v), m):
            weight = 1.0
            for c in Counter(ms).values():
                weight /= math.factorial(c)
            dd = delta_from_indices(tuple(ms) + tuple(integrand))
            prod = None
            for k in ms:
                prod = deltas[k] if prod is None else _convolve_trunc(prod, deltas[k])
            total += pref * weight * dd * prod
    return EpsilonJet(total)


def jet_alpha(lam_jets, rho, integrand=()):
    """Jet of the truncated moment alpha_integrand along an eigenvalue path.

    ``lam_jets`` is one jet per component; all must share the truncation
    order and a common positive constant term (the degenerate point).
    """
    if not lam_jets:
        raise DomainError("need at least one eigenvalue jet")
    order = lam_jets[0].order
    ltil = lam_jets[0].coeff(0)
    for j in lam_jets:
        if j.order != order:
            raise DomainError("eigenvalue jets must share a truncation order")
        if j.coeff(0) != ltil:
            raise DomainError("eigenvalue jets must share the degenerate constant term")
    if not ltil > 0.0:
        raise DomainError("degenerate eigenvalue must be positive")
    if not rho > 0.0:
        raise DomainError("rho must be positive")
    v = len(lam_jets)
    for k in integrand:
        if not 0 <= k < v:
            raise DomainError(f"integrand index {k} outside 0..{v - 1}")
    F = _ladder_values(v, rho / ltil, order + len(integrand) + 1)
    return _jet_alpha_from_values(lam_jets, v, tuple(integrand), F)


def _state_jets(state, order, drop_top=False):
    """Eigenvalue and moment jets of the requested order from an expansion
    state; ``drop_top`` zeroes the order-``order`` eigenvalue coefficient."""
    v = state.v
    lam_jets = []
    for k in range(v):
        c = np.zeros(order + 1)
        c[0] = state.lambda_tilde
        for i, vec in enumerate(state.lam_coeffs):
            if i + 1 <= order:
                c[i + 1] = vec[k]
        if drop_top:
            c[order] = 0.0
        lam_jets.append(EpsilonJet(c))
    mu_jets = []
    for k in range(v):
        c = np.zeros(order + 1)
        c[0] = state.mu_tilde
        for i, vec in enumerate(state.mu_coeffs):
            if i + 1 <= order:
                c[i + 1] = vec[k]
        mu_jets.append(EpsilonJet(c))
    return lam_jets, mu_jets


def residual(n, state):
    """Order-n matching residual assembled purely by jet arithmetic.

    Zero (to rounding) for every solved order; for an unsolved top order it
    equals minus the source vector plus the Jacobian acting on whatever
    order-n coefficients the state carries.
    """
    if n < 0 or n > MAX_JET_ORDER:
        raise DomainError(f"order must be 0..{MAX_JET_ORDER}")
    lam_jets, mu_jets = _state_jets(state, n)
    aj = jet_alpha(lam_jets, state.rho)
    out = np.empty(state.v)
    for k in range(state.v):
        akj = jet_alpha(lam_jets, state.rho, (k,))
        out[k] = (lam_jets[k] * (akj / aj) - mu_jets[k]).coeff(n)
    return out


def source_from_jets(n, state):
    """Order-n source vector recovered from jets (the residual with the
    order-n eigenvalue contribution removed), for cross-checking the
    table-driven route."""
    if n < 1 or n > MAX_JET_ORDER:
        raise DomainError(f"order must be 1..{MAX_JET_ORDER}")
    lam_jets, mu_jets = _state_jets(state, n, drop_top=True)
    aj = jet_alpha(lam_jets, state.rho)
    out = np.empty(state.v)
    for k in range(state.v):
        akj = jet_alpha(lam_jets, state.rho, (k,))
        out[k] = mu_jets[k].coeff(n) - (lam_jets[k] * (akj / aj)).coeff(n)
    return out


# ---------------------------------------------------------------------------
# coefficient-table extraction
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ExtractionResult:
    """A rederived coefficient table plus extraction quality metrics."""

    order: int
    structures: tuple
    ratio_keys: tuple
    gamma: tuple  # Fractions, rows per structure
    gamma_float: np.ndarray
    rationalization_err: float
    fit_residual: float


def _draw_state(order, v, rng, centered):
    ltil = rng.uniform(0.5, 1.5)
    coeffs = []
    l1 = rng.uniform(0.0, 1.0, v)
    if centered:
        l1[-1] = -l1[:-1].sum()
    coeffs.append(l1)
    for _ in range(order - 2):
        coeffs.append(rng.uniform(0.0, 1.0, v))
    return ltil, coeffs


def _multiset_cache(deltas, v, order, n_int_max=1):
    """Per-draw precomputation: for every direction multiset, the scaled jet
    product and the moment coefficients with 0 or 1 extra integrand index."""
    entries = []
    for m in range(1, order + 1):
        for ms in itertools.combinations_with_replacement(range(v), m):
            weight = 1.0
            for c in Counter(ms).values():
                weight /= math.factorial(c)
            prod = None
            for k in ms:
                prod = deltas[k] if prod is None else _convolve_trunc(prod, deltas[k])
            d0 = delta_from_indices(ms)
            d1 = np.array(
                [delta_from_indices(tuple(ms) + (k,)) for k in range(v)], float
            )
            entries.append((m, weight * prod, d0, d1))
    return entries


def _family_jets_from_values(entries, lam_jets, v, order, F, ltil):
    """alpha jet and all single-index moment jets for one ladder assignment."""
    a = np.zeros(order + 1)
    a[0] = F[0]
    ak = np.zeros((v, order + 1))
    ak[:, 0] = F[1]
    prefs0 = [
        _binomial_ladder_sum(F, m, 0) / (2.0 * ltil) ** m for m in range(order + 1)
    ]
    prefs1 = [
        _binomial_ladder_sum(F, m, 1) / (2.0 * ltil) ** m for m in range(order + 1)
    ]
    for m, prod, d0, d1 in entries:
        a += prefs0[m] * d0 * prod
        ak += prefs1[m] * np.outer(d1, prod)
    return a, ak


def extract_gamma_table(order, trials=8, seed=0, v=6, structure_basis=None,
                        center_first_order=None, max_denominator=64):
    """Rederive the order-n coefficient table from jet residuals alone.

    The residual source is a rational identity in the CDF-ladder values, so
    the ladder is evaluated at independent synthetic assignments (uniform in
    [0.2, 1)) — one per candidate ratio — and the per-ratio coefficients are
    separated by solving that linear system.  Random lower-order draws then
    disentangle the per-structure weights, which are rationalized with
    denominators up to ``max_denominator`` and verified against the floats.

    ``trials`` stacks independent draws; the default comfortably covers the
    order-4 basis, whose seven spectrum-sum-only structures need at least
    seven draws to separate.
    """
    if order not in (2, 3, 4):
        raise DomainError("extraction supports orders 2, 3, 4")
    if structure_basis is None:
        structure_basis = tables.GAMMA_TABLES[order].structures
    if center_first_order is None:
        center_first_order = order >= 3
    needed = max(s.max_order() for s in structure_basis)
    if needed > order - 1:
        raise DomainError(
            f"basis references coefficient order {needed}, but the order-{order} "
            f"source only involves orders up to {order - 1}"
        )
    cands = tuple(tables.candidate_ratio_keys(order))
    d = len(cands)
    rng_ladder = np.random.default_rng(np.random.SeedSequence([seed, 98]))
    ladders = [np.sort(rng_ladder.uniform(0.2, 1.0, order + 2))[::-1] for _ in range(d)]
    ratio_mat = np.array([[lad_ratio(key, F) for key in cands] for F in ladders])

    rows_struct = []
    rows_coeff = []
    for t in range(trials):
        rng = np.random.default_rng(np.random.SeedSequence([seed, t]))
        ltil, coeffs = _draw_state(order, v, rng, center_first_order)
        lam_jets = []
        deltas = []
        for k in range(v):
            c = np.zeros(order + 1)
            c[0] = ltil
            for i, vec in enumerate(coeffs):
                c[i + 1] = vec[k]
            lam_jets.append(EpsilonJet(c))
            dc = c.copy()
            dc[0] = 0.0
            deltas.append(dc)
        entries = _multiset_cache(deltas, v, order)

        S = np.empty((d, v))
        for i, F in enumerate(ladders):
            a, ak = _family_jets_from_values(entries, lam_jets, v, order, F, ltil)
            for k in range(v):
                rk = _jet_divide(ak[k], a)
                S[i, k] = -_convolve_trunc(lam_jets[k].coeffs, rk)[order]
        W = np.linalg.solve(ratio_mat, S)  # per-ratio coefficients, (d, v)
        C = W * ltil ** (order - 1)

        zetas = tables.zeta_values(coeffs)
        M = np.stack(
            [tables.structure_values(s, ltil, coeffs, zetas) for s in structure_basis]
        ).T  # (v, n_struct)
        rows_struct.append(M)
        rows_coeff.append(C.T)  # (v, d)

    M = np.vstack(rows_struct)
    C = np.vstack(rows_coeff)
    gamma_float, res, rank, _sv = np.linalg.lstsq(M, C, rcond=None)
    if rank < len(structure_basis):
        raise NumericError(
            f"structure system rank-deficient ({rank} < {len(structure_basis)}); "
            "increase trials"
        )
    fit = float(np.sqrt(res.sum()) / math.sqrt(M.shape[0])) if res.size else 0.0

    gamma = []
    worst = 0.0
    for row in gamma_float:
        frow = []
        for x in row:
            fr = Fraction(float(x)).limit_denominator(max_denominator)
            worst = max(worst, abs(float(fr) - float(x)))
            frow.append(fr)
        gamma.append(tuple(frow))
    if worst > 1e-6:
        raise NumericError(
            f"extracted coefficients do not rationalize cleanly "
            f"(worst gap {worst:.3e}); extraction unreliable"
        )
    return ExtractionResult(
        order=order,
        structures=tuple(structure_basis),
        ratio_keys=cands,
        gamma=tuple(gamma),
        gamma_float=gamma_float,
        rationalization_err=worst,
        fit_residual=fit,
    )


def lad_ratio(key, F):
    """Ratio-key value on an explicit ladder array F[0..]."""
    num = 1.0
    for off in key.offsets:
        num *= F[off // 2]
    return num / F[0] ** key.power


def extract_gamma(order, key, structure_basis=None, trials=8, seed=0):
    """Rederive one column of the order-n coefficient table: the rational
    weight of every basis structure on the requested ratio key."""
    result = extract_gamma_table(
        order, trials=trials, seed=seed, structure_basis=structure_basis
    )
    if key not in result.ratio_keys:
        raise DomainError(f"{key} is not a candidate ratio at order {order}")
    j = result.ratio_keys.index(key)
    return tuple(row[j] for row in result.gamma)


def compare_to_stored(result):
    """Diff an extraction against the embedded table of the same order.

    Returns (exact_match, mismatches) where mismatches lists
    (structure_name, ratio_key, extracted, stored) tuples; candidate
    ratios absent from the embedded table are expected to extract to zero.
    """
    table = tables.GAMMA_TABLES[result.order]
    stored_names = [s.name for s in table.structures]
    names = [s.name for s in result.structures]
    if names != stored_names:
        raise DomainError("extraction used a basis different from the embedded table")
    mismatches = []
    for i, name in enumerate(names):
        for j, key in enumerate(result.ratio_keys):
            got = result.gamma[i][j]
            want = table.gamma[i][table.ratio_keys.index(key)] if key in table.ratio_keys else Fraction(0)
            if got != want:
                mismatches.append((name, key, got, want))
    return (not mismatches, mismatches)
