"""Command-line front end and file formats (PPM/PGM images, metadata sidecars)."""
from __future__ import annotations

import argparse
import logging
import os
import sys
import tempfile
import time
from dataclasses import asdict, dataclass
from typing import Optional

import numpy as np

from . import __version__
from .errors import BasinscopeError
from .kimfamily import (
    NOT_FIXED,
    build_operator,
    classify_one,
    critical_points,
    fixed_points as kim_fixed_points,
)
from .numcore import INFINITY
from .operatordsl import ExprSyntaxError, compile_source
from .orbitengine import detect_cycle
from .rational import Kind, classify_multiplier, critical_candidates, fixed_points
from .raster import PlaneSpec, Raster, render_dynamical, render_parameter

log = logging.getLogger(__name__)

EXIT_OK, EXIT_USAGE, EXIT_COMPUTE, EXIT_IO = 0, 2, 3, 4

DEFAULTS = {
    "dyn": dict(bounds=(-1.0, 1.0, -1.0, 1.0), points=400, maxiter=20),
    "param": dict(bounds=(-50.0, 80.0, -65.0, 65.0), points=2000, maxiter=400),
    "analyze": dict(bounds=(-1.0, 1.0, -1.0, 1.0), points=400, maxiter=20),
}


class UsageError(Exception):
    pass


@dataclass(frozen=True)
class RunConfig:
    command: str
    lam: complex = 0j
    which: str = "P1"
    bounds: tuple = (-1.0, 1.0, -1.0, 1.0)
    points: int = 400
    maxiter: int = 20
    operator_source: Optional[str] = None
    orbit_seed: Optional[complex] = None
    output_path: Optional[str] = None
    iters_path: Optional[str] = None
    workers: int = 1

    @property
    def emit_iters(self) -> bool:
        return self.iters_path is not None

    def plane(self) -> PlaneSpec:
        return PlaneSpec(*self.bounds, points=self.points, maxiter=self.maxiter)


# argument parsing


def parse_complex(text: str) -> complex:
    """``RE,IM`` or a bare real."""
    parts = text.split(",")
    try:
        if len(parts) == 1:
            return complex(float(parts[0]), 0.0)
        if len(parts) == 2:
            return complex(float(parts[0]), float(parts[1]))
    except ValueError:
        pass
    raise argparse.ArgumentTypeError(f"expected RE,IM, got {text!r}")


def parse_bounds(text: str) -> tuple:
    try:
        vals = tuple(float(v) for v in text.split(","))
    except ValueError:
        vals = ()
    if len(vals) != 4:
        raise argparse.ArgumentTypeError(f"expected X0,XN,Y0,YN, got {text!r}")
    return vals


def parse_workers(text: str) -> int:
    if text == "auto":
        return os.cpu_count() or 1
    try:
        n = int(text)
    except ValueError:
        n = 0
    if n < 1:
        raise argparse.ArgumentTypeError(f"workers must be a positive integer or 'auto', got {text!r}")
    return n


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="basinscope", description="Basins of attraction and parameter planes of Kim's family.")
    parser.add_argument("--version", action="version", version=f"basinscope {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def plane_flags(p):
        p.add_argument("--bounds", type=parse_bounds)
        p.add_argument("--points", type=int)
        p.add_argument("--maxiter", type=int)
        p.add_argument("--out", required=True)
        p.add_argument("--iters", help="write the iteration grid as a 16-bit PGM")
        p.add_argument("--workers", type=parse_workers, default=1)

    dyn = sub.add_parser("dyn", help="dynamical plane at a fixed lambda")
    dyn.add_argument("--lambda", dest="lam", type=parse_complex, default=0j)
    dyn.add_argument("--orbit", type=parse_complex)
    dyn.add_argument("--op", help="custom operator expression in z and lam")
    plane_flags(dyn)

    param = sub.add_parser("param", help="parameter plane over lambda")
    param.add_argument("--plane", choices=("p1", "p2", "P1", "P2"), default="p1")
    plane_flags(param)

    an = sub.add_parser("analyze", help="fixed and critical point report")
    an.add_argument("--lambda", dest="lam", type=parse_complex, default=0j)
    an.add_argument("--op")
    return parser


_VALUE_FLAGS = ("--bounds", "--lambda", "--orbit", "--op")


def _glue_values(argv):
    # "--bounds -1,1,-1,1" would otherwise read as an unknown option
    out, it = [], iter(argv)
    for tok in it:
        if tok in _VALUE_FLAGS:
            nxt = next(it, None)
            out.append(tok if nxt is None else f"{tok}={nxt}")
        else:
            out.append(tok)
    return out


def parse_args(argv) -> RunConfig:
    ns = build_parser().parse_args(_glue_values(list(argv)))
    d = DEFAULTS[ns.command]
    workers = getattr(ns, "workers", 1)
    env = os.environ.get("BASINSCOPE_WORKERS")
    if env:
        try:
            workers = parse_workers(env)
        except argparse.ArgumentTypeError as e:
            raise UsageError(f"BASINSCOPE_WORKERS: {e}") from None
    cfg = RunConfig(
        command=ns.command,
        lam=getattr(ns, "lam", 0j),
        which=getattr(ns, "plane", "p1").upper(),
        bounds=getattr(ns, "bounds", None) or d["bounds"],
        points=getattr(ns, "points", None) or d["points"],
        maxiter=getattr(ns, "maxiter", None) or d["maxiter"],
        operator_source=getattr(ns, "op", None),
        orbit_seed=getattr(ns, "orbit", None),
        output_path=getattr(ns, "out", None),
        iters_path=getattr(ns, "iters", None),
        workers=workers,
    )
    if cfg.command != "analyze":
        try:
            cfg.plane()
        except ValueError as e:
            raise UsageError(str(e)) from None
    return cfg


# file formats


def quantize(rgb: np.ndarray) -> np.ndarray:
    return np.rint(np.clip(rgb, 0.0, 1.0) * 255).astype(np.uint8)


def _atomic_write(path: str, data: bytes):
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(prefix=".tmp-", dir=directory)
    try:
        with os.fdopen(fd, "wb") as f:
            f.write(data)
        umask = os.umask(0)
        os.umask(umask)
        os.chmod(tmp, 0o666 & ~umask)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def ppm_bytes(rgb: np.ndarray) -> bytes:
    """P6 with the top file row holding the largest y (row 0 of the grid is y0)."""
    q = quantize(rgb)[::-1]
    h, w = q.shape[:2]
    return f"P6\n{w} {h}\n255\n".encode("ascii") + q.tobytes()


def _header(data: bytes, magic: bytes):
    if not data.startswith(magic):
        raise ValueError(f"not a {magic.decode()} file")
    fields, pos = [], 2
    while len(fields) < 3:
        while data[pos : pos + 1].isspace():
            pos += 1
        if data[pos : pos + 1] == b"#":
            pos = data.index(b"\n", pos) + 1
            continue
        end = pos
        while not data[end : end + 1].isspace():
            end += 1
        fields.append(int(data[pos:end]))
        pos = end
    return fields, pos + 1


def read_ppm(path: str) -> np.ndarray:
    """uint8 (height, width, 3) array in grid orientation (row 0 = y0)."""
    with open(path, "rb") as f:
        data = f.read()
    (w, h, maxval), pos = _header(data, b"P6")
    if maxval != 255:
        raise ValueError(f"unsupported maxval {maxval}")
    arr = np.frombuffer(data, dtype=np.uint8, count=w * h * 3, offset=pos)
    return arr.reshape(h, w, 3)[::-1].copy()


def pgm16_bytes(grid: np.ndarray) -> bytes:
    g = np.clip(np.asarray(grid), 0, 65535).astype(">u2")[::-1]
    h, w = g.shape
    return f"P5\n{w} {h}\n65535\n".encode("ascii") + g.tobytes()


def read_pgm(path: str) -> np.ndarray:
    with open(path, "rb") as f:
        data = f.read()
    (w, h, maxval), pos = _header(data, b"P5")
    dtype = ">u2" if maxval > 255 else np.uint8
    arr = np.frombuffer(data, dtype=dtype, count=w * h, offset=pos)
    return arr.reshape(h, w)[::-1].astype(np.int64)


def write_image(raster: Raster, path: str, format: Optional[str] = None):
    fmt = (format or os.path.splitext(path)[1].lstrip(".") or "ppm").lower()
    if fmt == "ppm":
        data = ppm_bytes(raster.rgb)
    elif fmt == "png":
        data = _png_bytes(raster.rgb)
    else:
        raise ValueError(f"unknown image format {fmt!r}")
    try:
        _atomic_write(path, data)
    except OSError as e:
        raise OSError(f"cannot write {path}: {e.strerror or e}") from e


def _png_bytes(rgb: np.ndarray) -> bytes:
    import io

    try:
        from PIL import Image
    except ImportError as e:
        raise BasinscopeError("PNG output needs Pillow (pip install 'artifact[png]')") from e
    buf = io.BytesIO()
    Image.fromarray(quantize(rgb)[::-1], "RGB").save(buf, format="PNG")
    return buf.getvalue()


def write_iters(grid: np.ndarray, path: str):
    try:
        _atomic_write(path, pgm16_bytes(grid))
    except OSError as e:
        raise OSError(f"cannot write {path}: {e.strerror or e}") from e


def _fmt(z) -> str:
    if z is INFINITY:
        return "inf"
    z = complex(z.real + 0.0, z.imag + 0.0)
    return f"{z.real:.12g}{z.imag:+.12g}i"


def metadata_lines(cfg: RunConfig, stats: dict) -> list[str]:
    lines = [f"tool=basinscope {__version__}"]
    for k, v in asdict(cfg).items():
        if isinstance(v, complex):
            v = _fmt(v)
        elif isinstance(v, tuple):
            v = ",".join(f"{x:g}" for x in v)
        lines.append(f"config.{k}={v}")
    spec = cfg.plane()
    lines.append(f"config.points_effective={spec.points}")
    for k in ("width", "height", "wall_time"):
        if k in stats:
            lines.append(f"{k}={stats[k]}")
    for k, v in sorted(stats.get("basin_counts", {}).items(), key=lambda kv: str(kv[0])):
        lines.append(f"basin.{k}.pixels={v}")
    if "escape_basin" in stats:
        lines.append(f"escape_basin={stats['escape_basin']}")
    lines.append(f"nonconverged={stats.get('nonconverged', 0)}")
    lines.append(f"failed={stats.get('failed', 0)}")
    for i, (a, m) in enumerate(stats.get("attractors", [])):
        kind = classify_multiplier(m).value
        mag = "inf" if m is INFINITY else f"{abs(m):.12g}"
        lines.append(f"attractor.{i}={_fmt(a)} multiplier={_fmt(m)} |m|={mag} kind={kind}")
    return lines


def write_metadata(cfg: RunConfig, stats: dict, path: Optional[str] = None):
    path = path or f"{cfg.output_path}.meta"
    text = "\n".join(metadata_lines(cfg, stats)) + "\n"
    try:
        _atomic_write(path, text.encode("utf-8"))
    except OSError as e:
        raise OSError(f"cannot write {path}: {e.strerror or e}") from e


# analysis report


def _coeff_line(name, p) -> str:
    return f"{name} = [" + ", ".join(_fmt(c) for c in p.coeffs) + "]"


def analyze_report(lam: complex, op_source: Optional[str] = None) -> str:
    lam = complex(lam)
    out = [f"lambda = {_fmt(lam)}"]
    diagnostics = []
    if op_source:
        op = compile_source(op_source, lam)
        out.append(f"operator = {op_source}")
    else:
        op = build_operator(lam)
        out.append("operator = Kim family, conjugated")
    out.append(_coeff_line("numerator", op.num))
    out.append(_coeff_line("denominator", op.den))

    parabolic = False
    out.append("fixed points:")
    try:
        reports = fixed_points(op) if op_source else kim_fixed_points(lam)
        for r in reports:
            tag = " strange" if r.is_strange else ""
            out.append(f"  {_fmt(r.point)}  multiplier={_fmt(r.multiplier)}  |m|={abs(r.multiplier):.6g}  {r.kind.value}{tag}")
            parabolic |= r.kind is Kind.PARABOLIC
    except (BasinscopeError, ValueError) as e:
        diagnostics.append(f"fixed points: {e}")

    out.append("free critical points:")
    try:
        if op_source:
            pts = [c for c in critical_candidates(op) if abs(c) > 1e-9]
            for c in pts:
                out.append(f"  {_fmt(c)}")
        else:
            cs = critical_points(lam)
            if not cs.points:
                out.append("  no free critical points; operator ≡ z⁴ (Ostrowski)")
            for c in cs.points:
                out.append(f"  {_fmt(c)}")
            for i, (u, v) in enumerate(cs.pairs):
                out.append(f"  pair P{i + 1}: {_fmt(u)} * {_fmt(v)} = {_fmt(u * v)}")
    except (BasinscopeError, ValueError) as e:
        diagnostics.append(f"critical points: {e}")

    if not op_source:
        c1 = classify_one(lam)
        if c1 is NOT_FIXED:
            out.append("z=1: not fixed (O(1) = -1)")
        else:
            out.append(f"z=1 {c1.kind.value}: multiplier={_fmt(c1.multiplier)} |m|={abs(c1.multiplier):.6g} (|lambda-16| = {abs(lam - 16):.6g} vs 64)")
            parabolic |= c1.kind is Kind.PARABOLIC
        out.extend(_special_notes(lam, op))

    if parabolic:
        out.append("warning: a fixed point is parabolic; basins converge slowly, use maxiter >= 400")
    if diagnostics:
        out.append("diagnostics:")
        out.extend(f"  {d}" for d in diagnostics)
    return "\n".join(out) + "\n"


def _special_notes(lam: complex, op) -> list[str]:
    notes = []
    if lam == 0:
        notes.append("note: lambda=0 is Ostrowski's method; only the basins of 0 and infinity exist")
    elif lam == 1:
        notes.append("note: lambda=1 reduces to z^5(2+z)(2+2z+z^2)/(1+4z+6z^2+4z^3)")
    elif lam == -4:
        notes.append("note: lambda=-4 reduces to z^4(z^2+4z+5)/(5z^2+4z+1); critical points -1, -i, i")
    elif lam == 16:
        found = detect_cycle(op, -1 + 0.01j, warmup=200, max_period=8)
        if found is not None:
            period, pts = found
            shown = ", ".join(_fmt(p) for p in sorted(pts, key=lambda z: z.real))
            notes.append(f"note: lambda=16 has the {period}-cycle {{{shown}}}; z=1 is not fixed")
        else:
            notes.append("note: lambda=16 maps 1 to -1 and -1 to 1, the 2-cycle {-1, 1}")
    return notes


# entry point


def _stats(raster: Raster, wall: float) -> dict:
    s = dict(raster.meta)
    s.update(width=raster.width, height=raster.height, wall_time=f"{wall:.3f}")
    return s


def run(cfg: RunConfig, stdout=None) -> int:
    stdout = stdout or sys.stdout
    if cfg.command == "analyze":
        stdout.write(analyze_report(cfg.lam, cfg.operator_source))
        return EXIT_OK
    spec = cfg.plane()
    t0 = time.perf_counter()
    if cfg.command == "dyn":
        target = compile_source(cfg.operator_source, cfg.lam) if cfg.operator_source else cfg.lam
        raster = render_dynamical(target, spec, overlay_orbit=cfg.orbit_seed, workers=cfg.workers)
    else:
        raster = render_parameter(cfg.which, spec, workers=cfg.workers)
    wall = time.perf_counter() - t0
    write_image(raster, cfg.output_path)
    if cfg.iters_path:
        write_iters(raster.iters, cfg.iters_path)
    write_metadata(cfg, _stats(raster, wall))
    stdout.write(f"wrote {cfg.output_path} ({raster.width}x{raster.height}) in {wall:.2f}s\n")
    return EXIT_OK


def main(argv=None) -> int:
    logging.basicConfig(level=os.environ.get("BASINSCOPE_LOG", "WARNING"))
    argv = sys.argv[1:] if argv is None else argv
    try:
        cfg = parse_args(argv)
    except UsageError as e:
        print(f"basinscope: usage error: {e}", file=sys.stderr)
        return EXIT_USAGE
    try:
        return run(cfg)
    except ExprSyntaxError as e:
        print(f"basinscope: usage error: --op: {e}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as e:
        print(f"basinscope: I/O error: {e}", file=sys.stderr)
        return EXIT_IO
    except (BasinscopeError, ArithmeticError, ValueError) as e:
        print(f"basinscope: computation failed: {e}", file=sys.stderr)
        return EXIT_COMPUTE
