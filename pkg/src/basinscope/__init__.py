"""Basins of attraction, fixed points and parameter planes for Kim's fourth-order family."""

__version__ = "0.1.0"

from .errors import (  # noqa: E402
    BasinscopeError,
    DegreeOverflow,
    DenominatorZero,
    DerivativeZero,
    Indeterminate,
    NoFreeCritical,
    NonConvergence,
    RenderCancelled,
    UndefinedAtSixteen,
)
from .numcore import INFINITY, Polynomial, chordal, find_roots  # noqa: E402
from .rational import RationalOperator, apply, derivative_at, fixed_points  # noqa: E402
from .kimfamily import KimParameter, build_operator, critical_points, select_critical  # noqa: E402
from .operatordsl import compile_operator, compile_source, parse, symbolic_derivative  # noqa: E402
from .orbitengine import detect_cycle, run_orbit  # noqa: E402
from .raster import PlaneSpec, Raster, render_dynamical, render_parameter  # noqa: E402
