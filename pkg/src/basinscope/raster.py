"""Dynamical- and parameter-plane rendering.

Grids are row-major with row 0 at y0 (cartesian, y up). Work is split into
fixed blocks of rows, so the output does not depend on how many workers run
them.
"""
from __future__ import annotations

import colorsys
import logging
import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import BasinscopeError, RenderCancelled
from .kimfamily import as_parameter, build_operator, select_critical, select_critical_batch
from .numcore import INFINITY
from .orbitengine import (
    DYNAMICAL_CONV_TOL,
    ESCAPE_RADIUS,
    PARAMETER_CONV_TOL,
    attracting_fixed_points,
    iterate_batch,
    run_orbit,
)
from .rational import RationalOperator, apply

log = logging.getLogger(__name__)

BLOCK_ROWS = 8

RED, WHITE = 0, 1
NONCONVERGED = -1

YELLOW = (1.0, 1.0, 0.0)
MARK = (1.0, 1.0, 1.0)


@dataclass(frozen=True)
class PlaneSpec:
    x0: float
    xn: float
    y0: float
    yn: float
    points: int = 400
    maxiter: int = 20

    def __post_init__(self):
        if not (self.x0 < self.xn and self.y0 < self.yn):
            raise ValueError("bounds must satisfy x0 < xN and y0 < yN")
        if self.points < 2 or self.maxiter < 1:
            raise ValueError("need points >= 2 and maxiter >= 1")
        if self.points % 2 == 0:
            object.__setattr__(self, "points", self.points + 1)

    @property
    def bounds(self):
        return (self.x0, self.xn, self.y0, self.yn)

    @property
    def step(self) -> float:
        return max(self.xn - self.x0, self.yn - self.y0) / self.points


def _axis(lo: float, hi: float, step: float) -> np.ndarray:
    n = int(np.floor((hi - lo) / step + 1e-10)) + 1
    return lo + step * np.arange(n)


def mesh(spec: PlaneSpec):
    """Nodes x0, x0+step, ... <= xN (and likewise in y) with a single step
    taken from the longer side. Returns (grid, xs, ys); grid[j, k] = xs[k] + i ys[j]."""
    xs = _axis(spec.x0, spec.xn, spec.step)
    ys = _axis(spec.y0, spec.yn, spec.step)
    return xs[None, :] + 1j * ys[:, None], xs, ys


@dataclass
class Raster:
    rgb: np.ndarray  # (height, width, 3) in [0, 1]
    iters: np.ndarray  # (height, width)
    basins: np.ndarray  # (height, width); attractor index, or -1
    xs: np.ndarray
    ys: np.ndarray
    meta: dict = field(default_factory=dict)

    @property
    def height(self) -> int:
        return self.rgb.shape[0]

    @property
    def width(self) -> int:
        return self.rgb.shape[1]

    def pixel_of(self, z: complex):
        """(row, col) of the grid node nearest z, or None when outside."""
        step = self.xs[1] - self.xs[0] if self.xs.size > 1 else 1.0
        k = int(round((z.real - self.xs[0]) / step))
        j = int(round((z.imag - self.ys[0]) / step))
        if 0 <= j < self.height and 0 <= k < self.width:
            return j, k
        return None


# palette


_GOLDEN = 0.3819660112501051  # golden angle as a fraction of a turn
_GREEN_HSV = colorsys.rgb_to_hsv(41 / 255, 230 / 255, 56 / 255)


def basin_color(index: int):
    """(brightness slope, rgb at full brightness) for a basin index."""
    if index == 0:
        return 1.5, (1.0, 102 / 255, 0.0)
    if index == 1:
        return 2.0, (40 / 255, 80 / 255, 1.0)
    if index == 2:
        return 1.0, (41 / 255, 230 / 255, 56 / 255)
    h, s, v = _GREEN_HSV
    return 1.0, colorsys.hsv_to_rgb((h + (index - 2) * _GOLDEN) % 1.0, s, v)


def paint_basins(labels: np.ndarray, iters: np.ndarray, maxiter: int) -> np.ndarray:
    rgb = np.zeros(labels.shape + (3,))
    for b in np.unique(labels):
        if b < 0:
            continue
        slope, base = basin_color(int(b))
        sel = labels == b
        c = np.clip((maxiter - slope * iters[sel]) / maxiter, 0.0, 1.0)
        rgb[sel] = c[:, None] * np.array(base)[None, :]
    return rgb


# block scheduling


def _run_blocks(work, nrows: int, workers: int, stop: Optional[threading.Event]):
    blocks = [(s, min(s + BLOCK_ROWS, nrows)) for s in range(0, nrows, BLOCK_ROWS)]

    def task(rows):
        if stop is not None and stop.is_set():
            raise RenderCancelled("render stopped")
        return work(*rows)

    if workers <= 1:
        return [task(b) for b in blocks]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(task, blocks))


# dynamical plane


def _operator_for(target) -> RationalOperator:
    if isinstance(target, RationalOperator):
        return target
    return build_operator(as_parameter(target))


def render_dynamical(
    target,
    spec: PlaneSpec,
    overlay_orbit=None,
    workers: int = 1,
    stop: Optional[threading.Event] = None,
    conv_tol: float = DYNAMICAL_CONV_TOL,
    escape_radius: float = ESCAPE_RADIUS,
) -> Raster:
    """Basins of attraction of a Kim parameter or a compiled operator.

    Escaping seeds form the basin after the finite attractors. Attractors are
    marked with small white crosses; ``overlay_orbit`` traces one orbit in yellow.
    """
    op = _operator_for(target)
    attractors = attracting_fixed_points(op, tol=conv_tol)
    grid, xs, ys = mesh(spec)

    def work(r0, r1):
        block = grid[r0:r1]
        labels, iters, failed = iterate_batch(op, block, attractors, spec.maxiter, conv_tol, escape_radius)
        return labels.reshape(block.shape), iters.reshape(block.shape), failed.reshape(block.shape)

    parts = _run_blocks(work, grid.shape[0], workers, stop)
    labels = np.concatenate([p[0] for p in parts])
    iters = np.concatenate([p[1] for p in parts])
    failed = np.concatenate([p[2] for p in parts])

    raster = Raster(paint_basins(labels, iters, spec.maxiter), iters, labels, xs, ys)
    if overlay_orbit is not None:
        fate = run_orbit(op, complex(overlay_orbit), attractors, spec.maxiter, conv_tol, escape_radius, trace=True)
        for z in fate.trace:
            if z is INFINITY:
                continue
            px = raster.pixel_of(z)
            if px is not None:
                raster.rgb[px] = YELLOW
    for a in attractors.points:
        _mark(raster, a)

    n_att = len(attractors)
    raster.meta = {
        "kind": "dynamical",
        "operator": op.label,
        "attractors": [(a, m) for a, m in zip(attractors.points, attractors.multipliers)],
        "basin_counts": {i: int(np.sum(labels == i)) for i in range(n_att + 1)},
        "escape_basin": n_att,
        "nonconverged": int(np.sum((labels == NONCONVERGED) & ~failed)),
        "failed": int(np.sum(failed)),
    }
    return raster


def _mark(raster: Raster, z: complex):
    px = raster.pixel_of(z)
    if px is None:
        return
    j, k = px
    for dj, dk in ((0, 0), (1, 0), (-1, 0), (0, 1), (0, -1)):
        jj, kk = j + dj, k + dk
        if 0 <= jj < raster.height and 0 <= kk < raster.width:
            raster.rgb[jj, kk] = MARK


# parameter plane


def _kim_coeffs(lams: np.ndarray):
    one = np.ones_like(lams)
    zero = np.zeros_like(lams)
    num = np.stack([zero, zero, zero, zero, lams - 1, -4 * one, -6 * one, -4 * one, -one], axis=1)
    den = np.stack([-one, -4 * one, -6 * one, -4 * one, lams - 1], axis=1)
    return num, den


def _horner(c: np.ndarray, z: np.ndarray) -> np.ndarray:
    acc = c[:, -1].copy()
    for k in range(c.shape[1] - 2, -1, -1):
        acc = acc * z + c[:, k]
    return acc


def _critical_orbit_batch(lams, seeds, maxiter, conv_tol, escape_radius):
    num, den = _kim_coeffs(lams)
    c = np.array(seeds, dtype=complex)
    it = np.zeros(c.size, dtype=np.int64)
    active = np.arange(c.size)
    for _ in range(maxiter):
        with np.errstate(all="ignore"):
            a = np.abs(c[active])
            go = (a > conv_tol) & (a < escape_radius)
        active = active[go]
        if active.size == 0:
            break
        with np.errstate(all="ignore"):
            c[active] = _horner(num[active], c[active]) / _horner(den[active], c[active])
        it[active] += 1
    return c, it


def _fate_label(c: complex, conv_tol: float, escape_radius: float) -> int:
    if c is INFINITY:
        return RED
    a = abs(c)
    if a < conv_tol or a >= escape_radius or not np.isfinite(a):
        return RED
    return WHITE


def parameter_pixel(
    lam,
    which: str,
    maxiter: int,
    conv_tol: float = PARAMETER_CONV_TOL,
    escape_radius: float = ESCAPE_RADIUS,
):
    """(label, iterations) for one parameter value, via the scalar operator.

    RED when the critical orbit reaches 0 or infinity, WHITE otherwise.
    """
    p = as_parameter(lam)
    if p.is_zero:
        return RED, 0
    c = select_critical(p, which)
    op = build_operator(p)
    it = 0
    while it < maxiter and c is not INFINITY and conv_tol < abs(c) < escape_radius:
        c = apply(op, c)
        it += 1
    return _fate_label(c, conv_tol, escape_radius), it


def _is_special(lams: np.ndarray) -> np.ndarray:
    out = np.zeros(lams.shape, dtype=bool)
    for v in (0.0, 1.0, 16.0, -4.0):
        out |= np.abs(lams - v) <= 1e-12
    return out


def parameter_block(lams, which: str, maxiter: int, conv_tol=PARAMETER_CONV_TOL, escape_radius=ESCAPE_RADIUS):
    """Labels, iteration counts and failure flags for a flat array of parameters."""
    lams = np.asarray(lams, dtype=complex).ravel()
    labels = np.full(lams.size, WHITE, dtype=np.int64)
    iters = np.zeros(lams.size, dtype=np.int64)
    failed = np.zeros(lams.size, dtype=bool)
    special = _is_special(lams)
    gen = np.flatnonzero(~special)
    if gen.size:
        seeds = select_critical_batch(lams[gen], which)
        c, it = _critical_orbit_batch(lams[gen], seeds, maxiter, conv_tol, escape_radius)
        with np.errstate(invalid="ignore"):
            a = np.abs(c)
            red = (a < conv_tol) | (a >= escape_radius) | ~np.isfinite(c)
        labels[gen] = np.where(red, RED, WHITE)
        iters[gen] = it
    for k in np.flatnonzero(special):
        try:
            labels[k], iters[k] = parameter_pixel(lams[k], which, maxiter, conv_tol, escape_radius)
        except BasinscopeError as exc:
            log.warning("parameter pixel %s failed: %s", lams[k], exc)
            labels[k], iters[k], failed[k] = WHITE, maxiter, True
    return labels, iters, failed


def paint_parameter(labels: np.ndarray, iters: np.ndarray, maxiter: int) -> np.ndarray:
    rgb = np.ones(labels.shape + (3,))
    red = labels == RED
    rgb[red] = 0.0
    rgb[red, 0] = iters[red] / maxiter
    return rgb


def render_parameter(
    which: str,
    spec: PlaneSpec,
    workers: int = 1,
    stop: Optional[threading.Event] = None,
) -> Raster:
    """Parameter plane over lam: red where the selected free critical point's
    orbit goes to 0 or infinity (brightness it/maxiter), white otherwise."""
    grid, xs, ys = mesh(spec)

    def work(r0, r1):
        block = grid[r0:r1]
        out = parameter_block(block, which, spec.maxiter)
        return tuple(x.reshape(block.shape) for x in out)

    parts = _run_blocks(work, grid.shape[0], workers, stop)
    labels = np.concatenate([p[0] for p in parts])
    iters = np.concatenate([p[1] for p in parts])
    failed = np.concatenate([p[2] for p in parts])
    raster = Raster(paint_parameter(labels, iters, spec.maxiter), iters, labels, xs, ys)
    raster.meta = {
        "kind": "parameter",
        "plane": str(which).upper(),
        "basin_counts": {"red": int(np.sum(labels == RED)), "white": int(np.sum(labels == WHITE))},
        "nonconverged": int(np.sum(labels == WHITE)),
        "failed": int(np.sum(failed)),
    }
    return raster


def iteration_surface(raster: Raster) -> np.ndarray:
    return raster.iters.copy()
