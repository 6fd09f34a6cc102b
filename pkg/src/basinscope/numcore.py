"""Riemann-sphere arithmetic, dense polynomials and a simultaneous root finder.

Finite points are plain ``complex`` values; the point at infinity is the
``INFINITY`` singleton. Anything that produces a non-finite component is
mapped to ``INFINITY`` by :func:`extended`.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence, Union

import numpy as np

from .errors import NonConvergence


class _Infinity:
    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "INFINITY"

    def __str__(self):
        return "inf"

    def __reduce__(self):
        return (_Infinity, ())


INFINITY = _Infinity()

ExtendedComplex = Union[complex, _Infinity]


def is_infinite(z) -> bool:
    return z is INFINITY


def extended(z) -> ExtendedComplex:
    """Coerce a number to an extended complex value."""
    if z is INFINITY:
        return z
    z = complex(z)
    if not (math.isfinite(z.real) and math.isfinite(z.imag)):
        return INFINITY
    return z


def reciprocal(z: ExtendedComplex) -> ExtendedComplex:
    if z is INFINITY:
        return 0j
    if z == 0:
        return INFINITY
    return extended(1 / z)


def chordal(z: ExtendedComplex, w: ExtendedComplex) -> float:
    """Chordal distance on the Riemann sphere, in [0, 2]."""
    if z is INFINITY and w is INFINITY:
        return 0.0
    if z is INFINITY:
        return 2.0 / math.hypot(1.0, abs(w))
    if w is INFINITY:
        return 2.0 / math.hypot(1.0, abs(z))
    # huge finite values overflow |z|^2; go through the reciprocals
    if abs(z) > 1e150 or abs(w) > 1e150:
        return chordal(reciprocal(z), reciprocal(w))
    return 2.0 * abs(z - w) / math.sqrt((1.0 + abs(z) ** 2) * (1.0 + abs(w) ** 2))


def chordal_array(z: np.ndarray, w) -> np.ndarray:
    """Vectorised chordal distance between finite complex arrays."""
    z = np.asarray(z, dtype=complex)
    w = np.asarray(w, dtype=complex)
    with np.errstate(over="ignore", invalid="ignore"):
        d = 2.0 * np.abs(z - w) / np.sqrt((1.0 + np.abs(z) ** 2) * (1.0 + np.abs(w) ** 2))
    return d


def isclose(z: ExtendedComplex, w: ExtendedComplex, tol: float) -> bool:
    return chordal(z, w) < tol


@dataclass(frozen=True)
class Polynomial:
    """Dense polynomial, coefficients in ascending degree."""

    coeffs: tuple = field(default=(0j,))

    def __post_init__(self):
        c = [complex(v) for v in self.coeffs] or [0j]
        while len(c) > 1 and c[-1] == 0:
            c.pop()
        object.__setattr__(self, "coeffs", tuple(c))

    @classmethod
    def from_roots(cls, roots, lead=1.0) -> "Polynomial":
        p = cls((complex(lead),))
        for r in roots:
            p = p * cls((-r, 1))
        return p

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    @property
    def lead(self) -> complex:
        return self.coeffs[-1]

    @property
    def is_zero(self) -> bool:
        return self.coeffs == (0j,)

    @property
    def scale(self) -> float:
        return max(abs(c) for c in self.coeffs)

    @property
    def array(self) -> np.ndarray:
        return np.array(self.coeffs, dtype=complex)

    def __call__(self, z):
        # works for Python complex and numpy arrays alike
        acc = self.coeffs[-1] + 0 * z
        for c in self.coeffs[-2::-1]:
            acc = acc * z + c
        return acc

    def __neg__(self):
        return Polynomial(tuple(-c for c in self.coeffs))

    def __add__(self, other):
        return poly_arith(self, _as_poly(other), "add")

    __radd__ = __add__

    def __sub__(self, other):
        return poly_arith(self, _as_poly(other), "sub")

    def __rsub__(self, other):
        return poly_arith(_as_poly(other), self, "sub")

    def __mul__(self, other):
        return poly_arith(self, _as_poly(other), "mul")

    __rmul__ = __mul__

    def __pow__(self, k: int):
        out = Polynomial((1,))
        for _ in range(k):
            out = out * self
        return out

    def derivative(self) -> "Polynomial":
        return poly_derivative(self)

    def reversed(self) -> "Polynomial":
        """z^deg * p(1/z)."""
        return Polynomial(self.coeffs[::-1])

    def shift_degree(self, k: int) -> "Polynomial":
        return Polynomial((0j,) * k + self.coeffs)

    def __repr__(self):
        return f"Polynomial({list(self.coeffs)!r})"


def _as_poly(x) -> Polynomial:
    if isinstance(x, Polynomial):
        return x
    return Polynomial((complex(x),))


def eval_poly(p: Polynomial, z: ExtendedComplex) -> ExtendedComplex:
    if z is INFINITY:
        return INFINITY if p.degree >= 1 else extended(p.coeffs[0])
    with np.errstate(all="ignore"):
        return extended(p(complex(z)))


def poly_derivative(p: Polynomial) -> Polynomial:
    if p.degree == 0:
        return Polynomial((0j,))
    return Polynomial(tuple(k * c for k, c in enumerate(p.coeffs) if k > 0))


def poly_arith(a: Polynomial, b: Polynomial, op: str) -> Polynomial:
    if op in ("add", "sub"):
        sign = 1 if op == "add" else -1
        n = max(len(a.coeffs), len(b.coeffs))
        ca = a.coeffs + (0j,) * (n - len(a.coeffs))
        cb = b.coeffs + (0j,) * (n - len(b.coeffs))
        return Polynomial(tuple(x + sign * y for x, y in zip(ca, cb)))
    if op == "mul":
        out = [0j] * (len(a.coeffs) + len(b.coeffs) - 1)
        for i, x in enumerate(a.coeffs):
            if x == 0:
                continue
            for j, y in enumerate(b.coeffs):
                out[i + j] += x * y
        return Polynomial(tuple(out))
    raise ValueError(f"unknown polynomial op {op!r}")


def poly_divmod(a: Polynomial, b: Polynomial) -> tuple[Polynomial, Polynomial]:
    """Long division a = q*b + r with deg r < deg b."""
    if b.is_zero:
        raise ZeroDivisionError("polynomial division by zero")
    rem = list(a.coeffs)
    db = b.degree
    if a.degree < db:
        return Polynomial((0j,)), a
    q = [0j] * (a.degree - db + 1)
    for k in range(a.degree - db, -1, -1):
        coef = rem[k + db] / b.lead
        q[k] = coef
        for j, c in enumerate(b.coeffs):
            rem[k + j] -= coef * c
        rem[k + db] = 0j
    return Polynomial(tuple(q)), Polynomial(tuple(rem[:db] or [0j]))


@dataclass(frozen=True)
class RootSet:
    roots: tuple
    residual_bound: float
    converged: bool = True
    sweeps: int = 0


def residuals(p: Polynomial, roots) -> np.ndarray:
    """|p(r)| / (scale(p) * max(1, |r|)^deg) for each root.

    For |r| <= 1 this is the plain scaled residual; beyond the unit disk the
    extra factor keeps the measure attainable in double precision.
    """
    r = np.asarray(roots, dtype=complex)
    with np.errstate(all="ignore"):
        val = np.abs(p(r))
        return val / (p.scale * np.maximum(1.0, np.abs(r)) ** p.degree)


# fixed rotation of the starting circle so that symmetric inputs do not stall
_START_ROTATION = 0.4


def _horner_rows(c: np.ndarray, z: np.ndarray) -> np.ndarray:
    acc = np.repeat(c[:, -1:], z.shape[1], axis=1)
    for k in range(c.shape[1] - 2, -1, -1):
        acc = acc * z + c[:, k : k + 1]
    return acc


def _batch_residuals(c, scale, z):
    d = c.shape[1] - 1
    with np.errstate(all="ignore"):
        val = np.abs(_horner_rows(c, z))
        res = val / (scale[:, None] * np.maximum(1.0, np.abs(z)) ** d)
    return np.where(np.isfinite(res), res, np.inf)


def _aberth_offsets(c, dc, z):
    d = z.shape[1]
    with np.errstate(all="ignore"):
        pv = _horner_rows(c, z)
        dv = _horner_rows(dc, z)
        diff = z[:, :, None] - z[:, None, :]
        idx = np.arange(d)
        diff[:, idx, idx] = np.inf
        s = np.sum(1.0 / diff, axis=2)
        off = pv / (dv - pv * s)
    return np.where(np.isfinite(off), off, 0j)


def aberth_batch(coeffs, tol: float = 1e-12, max_sweeps: int = 500):
    """Aberth-Ehrlich iteration on a batch of same-degree polynomials.

    ``coeffs`` has shape (n, deg+1), ascending, with nonzero leading column.
    Returns (roots (n, deg), converged (n,), sweeps).
    """
    c = np.atleast_2d(np.asarray(coeffs, dtype=complex))
    n, m = c.shape
    d = m - 1
    if d < 1:
        raise ValueError("degree must be at least 1")
    lead = c[:, -1]
    if np.any(lead == 0):
        raise ValueError("leading coefficient must be nonzero")
    scale = np.max(np.abs(c), axis=1)
    dc = c[:, 1:] * np.arange(1, m)
    radius = 1.0 + np.max(np.abs(c[:, :-1] / lead[:, None]), axis=1)
    angles = 2 * np.pi * np.arange(d) / d + _START_ROTATION
    z = radius[:, None] * np.exp(1j * angles)[None, :]

    active = _batch_residuals(c, scale, z) > tol
    sweeps = 0
    while active.any() and sweeps < max_sweeps:
        sweeps += 1
        rows = active.any(axis=1)
        off = _aberth_offsets(c[rows], dc[rows], z[rows])
        zr = z[rows]
        zr = np.where(active[rows], zr - off, zr)
        z[rows] = zr
        active[rows] = _batch_residuals(c[rows], scale[rows], zr) > tol

    # polishing sweeps: accept a step only where it lowers the residual
    for _ in range(2):
        res = _batch_residuals(c, scale, z)
        cand = z - _aberth_offsets(c, dc, z)
        better = _batch_residuals(c, scale, cand) < res
        z = np.where(better, cand, z)

    converged = np.all(_batch_residuals(c, scale, z) <= tol, axis=1)
    return z, converged, sweeps


def find_roots(p: Polynomial, tol: float = 1e-12, max_sweeps: int = 500, strict: bool = True) -> RootSet:
    """All ``degree`` roots of ``p`` by Aberth-Ehrlich simultaneous iteration.

    Multiple roots come back as clusters of nearby values; no deduplication
    is done here. With ``strict`` a non-converged run raises NonConvergence
    carrying the best-so-far RootSet; otherwise the RootSet is returned with
    ``converged=False``.
    """
    if p.degree < 1:
        raise ValueError("find_roots needs degree >= 1")
    if tol <= 0:
        raise ValueError("tol must be positive")
    z, ok, sweeps = aberth_batch(np.array([p.coeffs]), tol=tol, max_sweeps=max_sweeps)
    rs = RootSet(tuple(complex(r) for r in z[0]), tol, bool(ok[0]), sweeps)
    if strict and not rs.converged:
        raise NonConvergence(f"residual above {tol:g} after {max_sweeps} sweeps", best=rs)
    return rs


def dedupe(points: Sequence[ExtendedComplex], tol: float) -> list:
    """Keep the first of any group of points closer than ``tol`` (chordal)."""
    out: list = []
    for z in points:
        if all(chordal(z, w) >= tol for w in out):
            out.append(z)
    return out
