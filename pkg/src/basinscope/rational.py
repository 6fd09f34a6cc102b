"""Rational operators on the Riemann sphere: evaluation, multipliers, fixed points."""
from __future__ import annotations

import enum
import functools
import math
from dataclasses import dataclass

import numpy as np

from .errors import Indeterminate
from .numcore import (
    INFINITY,
    ExtendedComplex,
    Polynomial,
    chordal,
    extended,
    find_roots,
    reciprocal,
)

# deterministic probe points for the derivative-pair consistency check
_PROBES = tuple(0.83 * complex(math.cos(t), math.sin(t)) for t in (0.31, 1.43, 2.57, 3.71, 5.03))


@dataclass(frozen=True)
class RationalOperator:
    """num/den together with its derivative dnum/dden."""

    num: Polynomial
    den: Polynomial
    dnum: Polynomial
    dden: Polynomial
    label: str = ""

    def __post_init__(self):
        if self.den.is_zero:
            raise ValueError("denominator is identically zero")
        self._check_derivative()

    @classmethod
    def from_pair(cls, num: Polynomial, den: Polynomial, label: str = "") -> "RationalOperator":
        dnum = num.derivative() * den - num * den.derivative()
        return cls(num, den, dnum, den * den, label)

    def _check_derivative(self):
        # dnum*den^2 == (num'*den - num*den')*dden, sampled at fixed probes
        qn = self.num.derivative() * self.den - self.num * self.den.derivative()
        for z in _PROBES:
            lhs = self.dnum(z) * self.den(z) ** 2
            rhs = qn(z) * self.dden(z)
            if abs(lhs - rhs) > 1e-10 * max(abs(lhs), abs(rhs), 1e-300) and abs(lhs - rhs) > 1e-280:
                raise ValueError(f"derivative pair inconsistent with num/den at z={z}")

    @property
    def degree(self) -> int:
        return max(self.num.degree, self.den.degree)

    def __call__(self, z: ExtendedComplex) -> ExtendedComplex:
        return apply(self, z)

    def at_infinity(self) -> "RationalOperator":
        """The conjugate w -> 1/O(1/w), whose behaviour at 0 is O's at infinity."""
        return self._chart

    @functools.cached_property
    def _chart(self) -> "RationalOperator":
        k = self.num.degree - self.den.degree
        rn, rd = self.den.reversed(), self.num.reversed()
        if k >= 0:
            rn = rn.shift_degree(k)
        else:
            rd = rd.shift_degree(-k)
        return RationalOperator.from_pair(rn, rd, label=f"{self.label} at infinity")


# beyond this modulus points are evaluated through the chart at infinity
_FAR = 1e8


def _negligible(value: complex, p: Polynomial, z: complex, tol: float) -> bool:
    bound = tol * p.scale * math.exp(max(p.degree, 0) * math.log(max(1.0, abs(z))))
    return abs(value) <= bound


def _ratio(n: Polynomial, d: Polynomial, z: complex, tol: float, max_order: int):
    pn, pd = n, d
    for _ in range(max_order + 1):
        nv, dv = pn(z), pd(z)
        if not _negligible(dv, pd, z, tol):
            return extended(nv / dv)
        if not _negligible(nv, pn, z, tol):
            return INFINITY
        pn, pd = pn.derivative(), pd.derivative()
    raise Indeterminate(f"0/0 at z={z} not resolved after {max_order} derivative levels")


def apply(op: RationalOperator, z: ExtendedComplex, tol: float = 1e-12, max_order: int = 4) -> ExtendedComplex:
    """Evaluate the operator at an extended complex point.

    A shared root of num and den is resolved by repeated L'Hopital steps.
    """
    if z is INFINITY:
        return reciprocal(apply(op.at_infinity(), 0j, tol, max_order))
    z = complex(z)
    if abs(z) > _FAR:
        return reciprocal(apply(op.at_infinity(), 1 / z, tol, max_order))
    with np.errstate(all="ignore"):
        return _ratio(op.num, op.den, z, tol, max_order)


def derivative_at(op: RationalOperator, z: ExtendedComplex, tol: float = 1e-12) -> ExtendedComplex:
    """O'(z). At infinity this is the derivative of the conjugate map at 0,
    which is the multiplier when infinity is fixed."""
    if z is INFINITY:
        return derivative_at(op.at_infinity(), 0j, tol)
    with np.errstate(all="ignore"):
        return _ratio(op.dnum, op.dden, complex(z), tol, 4)


class Kind(enum.Enum):
    SUPERATTRACTING = "superattracting"
    ATTRACTING = "attracting"
    PARABOLIC = "parabolic"
    REPELLING = "repelling"


def classify_multiplier(m: ExtendedComplex, tol: float = 1e-9) -> Kind:
    if m is INFINITY:
        return Kind.REPELLING
    a = abs(m)
    if a <= tol:
        return Kind.SUPERATTRACTING
    if abs(a - 1.0) <= tol:
        return Kind.PARABOLIC
    return Kind.ATTRACTING if a < 1.0 else Kind.REPELLING


@dataclass(frozen=True)
class FixedPointReport:
    point: ExtendedComplex
    multiplier: ExtendedComplex
    kind: Kind
    is_strange: bool

    @property
    def is_attracting(self) -> bool:
        return self.kind is not Kind.REPELLING


def report(op: RationalOperator, point: ExtendedComplex, tol: float = 1e-9) -> FixedPointReport:
    m = derivative_at(op, point)
    strange = not (point is INFINITY or point == 0)
    return FixedPointReport(point, m, classify_multiplier(m, tol), strange)


def _sort_key(z):
    if z is INFINITY:
        return (math.inf, 0.0)
    return (round(abs(z), 9), round(math.atan2(z.imag, z.real), 9))


def _cluster_means(points, tol):
    clusters: list[list[complex]] = []
    for z in points:
        for c in clusters:
            if chordal(z, c[0]) < tol:
                c.append(z)
                break
        else:
            clusters.append([z])
    return [sum(c) / len(c) for c in clusters]


def fixed_points(
    op: RationalOperator,
    root_tol: float = 1e-12,
    kind_tol: float = 1e-9,
    common_tol: float = 1e-8,
    merge_tol: float = 1e-6,
) -> list[FixedPointReport]:
    """All fixed points of ``op`` including infinity when it is fixed.

    Finite ones are the roots of num - z*den, minus roots shared by num and den
    (those are removable singularities, not fixed points). Clustered roots of
    a multiple fixed point are merged into their mean.
    """
    F = op.num - op.den.shift_degree(1)
    if F.is_zero:
        raise ValueError("operator is the identity; every point is fixed")
    finite: list[complex] = []
    if F.degree >= 1:
        rs = find_roots(F, tol=root_tol)
        roots = list(rs.roots)
        if F.coeffs[0] == 0:
            # 0 is an exact root; snap the nearest numerical value onto it
            i = min(range(len(roots)), key=lambda k: abs(roots[k]))
            roots[i] = 0j
        for r in roots:
            if _negligible(op.den(r), op.den, r, common_tol):
                continue
            finite.append(r)
        finite = _cluster_means(finite, merge_tol)
    pts: list = sorted(finite, key=_sort_key)
    if apply(op, INFINITY) is INFINITY:
        pts.append(INFINITY)
    return [report(op, z, kind_tol) for z in pts]


def critical_candidates(op: RationalOperator, root_tol: float = 1e-12, merge_tol: float = 1e-6) -> list:
    """Finite zeros of O' (roots of dnum not shared with dden), deduplicated."""
    if op.dnum.degree < 1:
        return []
    rs = find_roots(op.dnum, tol=root_tol, strict=False)
    keep = [r for r in rs.roots if not _negligible(op.dden(r), op.dden, r, 1e-8)]
    return sorted(_cluster_means(keep, merge_tol), key=_sort_key)
