"""Orbit iteration, fate classification and cycle detection."""
from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import Indeterminate
from .numcore import INFINITY, ExtendedComplex, chordal, extended
from .rational import RationalOperator, apply, derivative_at, fixed_points

DYNAMICAL_CONV_TOL = 1e-3
PARAMETER_CONV_TOL = 1e-2
ESCAPE_RADIUS = 1000.0


class Outcome(enum.Enum):
    CONVERGED = "converged"
    ESCAPED = "escaped"
    CYCLE = "cycle"
    UNDECIDED = "undecided"


@dataclass(frozen=True)
class OrbitFate:
    outcome: Outcome
    iterations: int
    attractor: Optional[int] = None
    period: Optional[int] = None
    cycle: tuple = ()
    trace: Optional[tuple] = None


@dataclass(frozen=True)
class AttractorList:
    points: tuple
    tol: float = DYNAMICAL_CONV_TOL
    multipliers: tuple = field(default=())

    def __post_init__(self):
        pts = self.points
        for i in range(len(pts)):
            for j in range(i):
                if abs(pts[i] - pts[j]) <= 2 * self.tol:
                    raise ValueError(f"attractors {pts[j]} and {pts[i]} closer than 2*tol")

    def __len__(self):
        return len(self.points)


def run_orbit(
    op: RationalOperator,
    z0: ExtendedComplex,
    attractors: AttractorList,
    maxiter: int,
    conv_tol: float = DYNAMICAL_CONV_TOL,
    escape_radius: float = ESCAPE_RADIUS,
    trace: bool = False,
    max_period: int = 0,
) -> OrbitFate:
    """Iterate from z0 until it lands within conv_tol of an attractor, escapes
    past escape_radius, or maxiter steps pass.

    The seed itself is not tested; the first check happens after one step.
    With ``max_period`` > 1 an undecided orbit is also probed for a cycle.
    """
    if maxiter < 1 or conv_tol <= 0 or escape_radius <= 1:
        raise ValueError("need maxiter >= 1, conv_tol > 0, escape_radius > 1")
    z = extended(z0)
    path = [z] if trace else None
    for n in range(1, maxiter + 1):
        z = apply(op, z)
        if path is not None:
            path.append(z)
        if z is not INFINITY:
            for i, a in enumerate(attractors.points):
                if abs(z - a) < conv_tol:
                    return OrbitFate(Outcome.CONVERGED, n, attractor=i, trace=_t(path))
        if z is INFINITY or abs(z) > escape_radius:
            return OrbitFate(Outcome.ESCAPED, n, trace=_t(path))
    if max_period > 1:
        found = detect_cycle(op, z, warmup=0, max_period=max_period)
        if found is not None:
            period, pts = found
            return OrbitFate(Outcome.CYCLE, maxiter, period=period, cycle=tuple(pts), trace=_t(path))
    return OrbitFate(Outcome.UNDECIDED, maxiter, trace=_t(path))


def _t(path):
    return None if path is None else tuple(path)


def detect_cycle(
    op: RationalOperator,
    z0: ExtendedComplex,
    warmup: int = 500,
    max_period: int = 16,
    cycle_tol: float = 1e-6,
    confirmations: int = 3,
):
    """Smallest period p >= 2 with chordal |z_n - z_{n+p}| < cycle_tol held for
    ``confirmations`` consecutive n after warmup. Returns (p, points) or None;
    convergence to a fixed point (p = 1) is not a cycle."""
    if max_period < 2:
        raise ValueError("max_period must be at least 2")
    z = extended(z0)
    for _ in range(warmup):
        z = apply(op, z)
    orbit = [z]
    for _ in range(max_period + confirmations - 1):
        orbit.append(apply(op, orbit[-1]))
    for p in range(1, max_period + 1):
        if all(chordal(orbit[i], orbit[i + p]) < cycle_tol for i in range(confirmations)):
            if p == 1:
                return None
            return p, orbit[:p]
    return None


def attracting_fixed_points(op: RationalOperator, tol: float = DYNAMICAL_CONV_TOL, parabolic_tol: float = 1e-9) -> AttractorList:
    """Finite fixed points with |O'| <= 1 (parabolic ones included), 0 first.

    Falls back to {0} when nothing passes the filter.
    """
    reports = [r for r in fixed_points(op, kind_tol=parabolic_tol) if r.point is not INFINITY]
    keep = []
    for r in reports:
        m = r.multiplier
        if m is not INFINITY and abs(m) <= 1 + parabolic_tol:
            if all(abs(r.point - q.point) > 2 * tol for q in keep):
                keep.append(r)
    keep.sort(key=lambda r: (r.point != 0,))
    if not keep:
        return AttractorList((0j,), tol, (derivative_at(op, 0j),))
    return AttractorList(tuple(r.point for r in keep), tol, tuple(r.multiplier for r in keep))


def iterate_batch(
    op: RationalOperator,
    seeds: np.ndarray,
    attractors: AttractorList,
    maxiter: int,
    conv_tol: float = DYNAMICAL_CONV_TOL,
    escape_radius: float = ESCAPE_RADIUS,
):
    """run_orbit over an array of finite seeds at once.

    Returns (labels, iters, failed): label i for attractor i, len(attractors)
    for escape, -1 for undecided. Points that hit a 0/0 are handed to the
    scalar ``apply``; if that cannot resolve them they are marked failed
    (label -1, failed True).
    """
    z = np.array(seeds, dtype=complex).ravel()
    n = z.size
    labels = np.full(n, -1, dtype=np.int64)
    iters = np.full(n, maxiter, dtype=np.int64)
    failed = np.zeros(n, dtype=bool)
    active = np.arange(n)
    num, den = op.num, op.den
    ntol = 1e-12 * num.scale
    dtol = 1e-12 * den.scale
    att = np.array(attractors.points, dtype=complex)
    n_att = len(att)
    for step in range(1, maxiter + 1):
        za = z[active]
        with np.errstate(all="ignore"):
            nv = num(za)
            dv = den(za)
            big = np.maximum(1.0, np.abs(za))
            nz = (np.abs(nv) <= ntol * big**num.degree) & (np.abs(dv) <= dtol * big**den.degree)
            new = nv / dv
        if nz.any():
            for k in np.flatnonzero(nz):
                try:
                    w = apply(op, complex(za[k]))
                except Indeterminate:
                    failed[active[k]] = True
                    new[k] = np.nan
                    continue
                new[k] = np.inf if w is INFINITY else w
        z[active] = new
        done = failed[active].copy()
        hit = np.full(active.size, -1, dtype=np.int64)
        with np.errstate(invalid="ignore"):
            for i in range(n_att - 1, -1, -1):
                hit = np.where(np.abs(new - att[i]) < conv_tol, i, hit)
            finite = np.isfinite(new)
            escaped = (~finite | (np.abs(new) > escape_radius)) & (hit < 0) & ~done
        conv = (hit >= 0) & ~done
        labels[active[conv]] = hit[conv]
        labels[active[escaped]] = n_att
        stop = conv | escaped | done
        iters[active[stop]] = step
        active = active[~stop]
        if active.size == 0:
            break
    iters[failed] = maxiter
    return labels, iters, failed
