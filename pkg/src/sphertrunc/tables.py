"""Embedded source-term coefficient tables for expansion orders 2, 3, 4.

Each order-n source term is a bilinear combination: spectral structures
(per-component monomials in the lower-order coefficient vectors, optionally
multiplied by spectrum-wide sums) times chi-square CDF-ratio values, with
exact rational weights.  The weights ship as data — transcription-validated
against an independent jet-based rederivation (see ``jets.extract_gamma``) —
and every row sums to zero, which is what makes the source vanish in the
fully degenerate limit.

Orders 3 and 4 assume the first-order coefficient vector sums to zero
(centered splitting); order 2 is general.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .errors import DomainError
from .specfun import ratio_key

__all__ = [
    "Structure",
    "GammaTable",
    "GAMMA_TABLES",
    "zeta_values",
    "structure_values",
    "candidate_ratio_keys",
]


@dataclass(frozen=True)
class Structure:
    """One spectral structure: lambda_tilde^scale_pow times per-component
    factors prod (lambda^(order)_k)^power times spectrum-sum factors.

    ``zeta_ids`` name spectrum sums by the orders they multiply per component:
    "z12" is sum_j lambda^(1)_j lambda^(2)_j, "z111" is sum_j (lambda^(1)_j)^3,
    and so on.
    """

    name: str
    scale_pow: int
    k_factors: tuple  # ((order, power), ...)
    zeta_ids: tuple  # ("z12", ...)

    @property
    def is_uniform(self):
        """True when the structure has no per-component factor (its value is
        the same for every k)."""
        return not self.k_factors

    def max_order(self):
        orders = [o for o, _ in self.k_factors]
        orders += [int(ch) for zid in self.zeta_ids for ch in zid[1:]]
        return max(orders, default=0)


def zeta_values(coeffs):
    """All spectrum-sum structures computable from the given coefficient
    vectors (coeffs[i] is the order-(i+1) vector).

    Returns a dict keyed by the "z<orders>" ids used in the tables.
    """
    ids = ["z1", "z11", "z111", "z1111", "z2", "z12", "z112", "z22", "z3", "z13"]
    out = {}
    for zid in ids:
        orders = [int(ch) for ch in zid[1:]]
        if orders and max(orders) > len(coeffs):
            continue
        prod = np.ones_like(np.asarray(coeffs[0], float)) if coeffs else None
        if prod is None:
            continue
        for o in orders:
            prod = prod * np.asarray(coeffs[o - 1], float)
        out[zid] = float(prod.sum())
    return out


def structure_values(struct, lambda_tilde, coeffs, zetas=None):
    """Evaluate a structure for every component; returns an array of length v.

    ``zetas`` may carry precomputed spectrum sums (from :func:`zeta_values`)
    to avoid recomputation in table loops.
    """
    if struct.max_order() > len(coeffs):
        raise DomainError(
            f"structure {struct.name} needs coefficient orders up to "
            f"{struct.max_order()}, have {len(coeffs)}"
        )
    if zetas is None:
        zetas = zeta_values(coeffs)
    v = np.asarray(coeffs[0], float).size if coeffs else 1
    vals = np.full(v, float(lambda_tilde) ** struct.scale_pow)
    for order, power in struct.k_factors:
        vals = vals * np.asarray(coeffs[order - 1], float) ** power
    for zid in struct.zeta_ids:
        vals = vals * zetas[zid]
    return vals


@dataclass(frozen=True)
class GammaTable:
    """Rational coefficient table for one expansion order."""

    order: int
    structures: tuple
    ratio_keys: tuple
    gamma: tuple  # rows (per structure) of Fractions (per ratio key)

    def row_sums(self):
        return [sum(row, Fraction(0)) for row in self.gamma]

    def column(self, key):
        if key not in self.ratio_keys:
            raise DomainError(f"ratio key {key} not in the order-{self.order} table")
        j = self.ratio_keys.index(key)
        return tuple(row[j] for row in self.gamma)

    def entry(self, structure_name, key):
        names = [s.name for s in self.structures]
        if structure_name not in names:
            raise DomainError(f"no structure named {structure_name!r}")
        return self.gamma[names.index(structure_name)][self.ratio_keys.index(key)]


def _frac_rows(rows):
    return tuple(tuple(Fraction(x) for x in row) for row in rows)


_F = Fraction

_TABLE_2 = GammaTable(
    order=2,
    structures=(
        Structure("l1^2", 0, ((1, 2),), ()),
        Structure("l1*z1", 0, ((1, 1),), ("z1",)),
        Structure("z1^2", 0, (), ("z1", "z1")),
        Structure("z11", 0, (), ("z11",)),
    ),
    ratio_keys=(
        ratio_key([6]),
        ratio_key([4, 2]),
        ratio_key([2, 2, 2]),
        ratio_key([4]),
        ratio_key([2, 2]),
    ),
    gamma=_frac_rows(
        [
            [-1, 0, 0, 1, 0],
            [_F(-1, 2), _F(1, 2), 0, 0, 0],
            [_F(-1, 8), _F(3, 8), _F(-1, 4), 0, 0],
            [_F(-1, 4), _F(1, 4), 0, _F(1, 2), _F(-1, 2)],
        ]
    ),
)

_TABLE_3 = GammaTable(
    order=3,
    structures=(
        Structure("l1^3", 0, ((1, 3),), ()),
        Structure("l1*z11", 0, ((1, 1),), ("z11",)),
        Structure("z111", 0, (), ("z111",)),
        Structure("L*l1*l2", 1, ((1, 1), (2, 1)), ()),
        Structure("L*l1*z2", 1, ((1, 1),), ("z2",)),
        Structure("L*z12", 1, (), ("z12",)),
    ),
    ratio_keys=(
        ratio_key([8]),
        ratio_key([6, 2]),
        ratio_key([4, 4]),
        ratio_key([6]),
        ratio_key([4, 2]),
        ratio_key([4]),
        ratio_key([2, 2]),
    ),
    gamma=_frac_rows(
        [
            [-1, 0, 0, 2, 0, -1, 0],
            [_F(-1, 4), 0, _F(1, 4), _F(1, 2), _F(-1, 2), 0, 0],
            [_F(-1, 6), _F(1, 6), 0, _F(1, 2), _F(-1, 2), _F(-1, 2), _F(1, 2)],
            [0, 0, 0, -2, 0, 2, 0],
            [0, 0, 0, _F(-1, 2), _F(1, 2), 0, 0],
            [0, 0, 0, _F(-1, 2), _F(1, 2), 1, -1],
        ]
    ),
)

_TABLE_4 = GammaTable(
    order=4,
    structures=(
        Structure("l1^4", 0, ((1, 4),), ()),
        Structure("l1^2*z11", 0, ((1, 2),), ("z11",)),
        Structure("l1*z111", 0, ((1, 1),), ("z111",)),
        Structure("z11^2", 0, (), ("z11", "z11")),
        Structure("z1111", 0, (), ("z1111",)),
        Structure("L*l1^2*l2", 1, ((1, 2), (2, 1)), ()),
        Structure("L*l1^2*z2", 1, ((1, 2),), ("z2",)),
        Structure("L*l2*z11", 1, ((2, 1),), ("z11",)),
        Structure("L*z11*z2", 1, (), ("z11", "z2")),
        Structure("L*l1*z12", 1, ((1, 1),), ("z12",)),
        Structure("L*z112", 1, (), ("z112",)),
        Structure("L^2*l2^2", 2, ((2, 2),), ()),
        Structure("L^2*l2*z2", 2, ((2, 1),), ("z2",)),
        Structure("L^2*z2^2", 2, (), ("z2", "z2")),
        Structure("L^2*z22", 2, (), ("z22",)),
        Structure("L^2*l1*l3", 2, ((1, 1), (3, 1)), ()),
        Structure("L^2*l1*z3", 2, ((1, 1),), ("z3",)),
        Structure("L^2*z13", 2, (), ("z13",)),
    ),
    ratio_keys=(
        ratio_key([10]),
        ratio_key([8, 2]),
        ratio_key([6, 4]),
        ratio_key([4, 4, 2]),
        ratio_key([8]),
        ratio_key([6, 2]),
        ratio_key([4, 4]),
        ratio_key([4, 2, 2]),
        ratio_key([6]),
        ratio_key([4, 2]),
        ratio_key([2, 2, 2]),
        ratio_key([4]),
        ratio_key([2, 2]),
    ),
    gamma=_frac_rows(
        [
            [-1, 0, 0, 0, 3, 0, 0, 0, -3, 0, 0, 1, 0],
            [_F(-1, 4), 0, _F(1, 4), 0, _F(3, 4), _F(-1, 2), _F(-1, 4), 0, _F(-1, 2), _F(1, 2), 0, 0, 0],
            [_F(-1, 6), 0, _F(1, 6), 0, _F(1, 2), 0, _F(-1, 2), 0, _F(-1, 2), _F(1, 2), 0, 0, 0],
            [_F(-1, 32), _F(1, 32), _F(1, 16), _F(-1, 16), _F(1, 8), _F(-1, 4), _F(-1, 8), _F(1, 4), _F(-1, 8), _F(3, 8), _F(-1, 4), 0, 0],
            [_F(-1, 8), _F(1, 8), 0, 0, _F(1, 2), _F(-1, 2), 0, 0, _F(-3, 4), _F(3, 4), 0, _F(1, 2), _F(-1, 2)],
            [0, 0, 0, 0, -3, 0, 0, 0, 6, 0, 0, -3, 0],
            [0, 0, 0, 0, _F(-1, 2), _F(1, 2), 0, 0, _F(1, 2), _F(-1, 2), 0, 0, 0],
            [0, 0, 0, 0, _F(-1, 4), 0, _F(1, 4), 0, _F(1, 2), _F(-1, 2), 0, 0, 0],
            [0, 0, 0, 0, _F(-1, 8), _F(1, 4), _F(1, 8), _F(-1, 4), _F(1, 4), _F(-3, 4), _F(1, 2), 0, 0],
            [0, 0, 0, 0, _F(-1, 2), 0, _F(1, 2), 0, 1, -1, 0, 0, 0],
            [0, 0, 0, 0, _F(-1, 2), _F(1, 2), 0, 0, _F(3, 2), _F(-3, 2), 0, _F(-3, 2), _F(3, 2)],
            [0, 0, 0, 0, 0, 0, 0, 0, -1, 0, 0, 1, 0],
            [0, 0, 0, 0, 0, 0, 0, 0, _F(-1, 2), _F(1, 2), 0, 0, 0],
            [0, 0, 0, 0, 0, 0, 0, 0, _F(-1, 8), _F(3, 8), _F(-1, 4), 0, 0],
            [0, 0, 0, 0, 0, 0, 0, 0, _F(-1, 4), _F(1, 4), 0, _F(1, 2), _F(-1, 2)],
            [0, 0, 0, 0, 0, 0, 0, 0, -2, 0, 0, 2, 0],
            [0, 0, 0, 0, 0, 0, 0, 0, _F(-1, 2), _F(1, 2), 0, 0, 0],
            [0, 0, 0, 0, 0, 0, 0, 0, _F(-1, 2), _F(1, 2), 0, 1, -1],
        ]
    ),
)

GAMMA_TABLES = {2: _TABLE_2, 3: _TABLE_3, 4: _TABLE_4}


def candidate_ratio_keys(order):
    """Every CDF-ratio key that can appear in the order-n source term.

    Each ratio is a product of at most order+1 ladder CDFs whose aggregate
    dof offset is at most 2(order+1); these are in bijection with integer
    partitions of size <= order+1.  Sorted descending by aggregate offset,
    then ascending by factor count — the embedded tables list their columns
    in the same order.
    """
    if order < 1:
        raise DomainError("order must be >= 1")
    cap = order + 1
    parts = []

    def rec(prefix, largest, remaining):
        parts.append(tuple(prefix))
        for p in range(min(largest, remaining), 0, -1):
            prefix.append(p)
            rec(prefix, p, remaining - p)
            prefix.pop()

    rec([], cap, cap)
    uniq = sorted(set(parts), key=lambda t: (-sum(t), len(t), tuple(-p for p in t)))
    return [ratio_key([2 * p for p in t]) for t in uniq]
