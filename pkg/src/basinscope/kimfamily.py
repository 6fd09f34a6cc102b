"""Kim's fourth-order family on quadratics, conjugated by z -> (z-a)/(z-b).

With eta = mu = 0 the two-step scheme reduces to a one-parameter rational map
whose roots sit at 0 and infinity. Everything here is parametrised by
``KimParameter``; the special values 0, 1, 16 and -4 are snapped exactly.
"""
from __future__ import annotations

import cmath
import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DenominatorZero, DerivativeZero, NoFreeCritical, UndefinedAtSixteen
from .numcore import (
    INFINITY,
    ExtendedComplex,
    Polynomial,
    aberth_batch,
    chordal,
    chordal_array,
    extended,
    find_roots,
    poly_divmod,
)
from .rational import FixedPointReport, Kind, RationalOperator, apply, fixed_points as _fixed_points

SPECIAL_TOL = 1e-12
_SPECIALS = {"zero": 0.0, "one": 1.0, "sixteen": 16.0, "minus_four": -4.0}

SQRT2 = math.sqrt(2.0)
SQRT3 = math.sqrt(3.0)
CR1_16 = complex(-1 / 3, -2 * SQRT2 / 3)
CR2_16 = complex(-1 / 3, 2 * SQRT2 / 3)
OMEGA = complex(-0.5, SQRT3 / 2)


@dataclass(frozen=True)
class KimParameter:
    lam: complex
    is_zero: bool = field(init=False, default=False)
    is_one: bool = field(init=False, default=False)
    is_sixteen: bool = field(init=False, default=False)
    is_minus_four: bool = field(init=False, default=False)

    def __post_init__(self):
        lam = complex(self.lam)
        for name, value in _SPECIALS.items():
            if lam == value or abs(lam - value) <= SPECIAL_TOL:
                lam = complex(value)
                object.__setattr__(self, f"is_{name}", True)
        object.__setattr__(self, "lam", lam)

    @property
    def is_special(self) -> bool:
        return self.is_zero or self.is_one or self.is_sixteen or self.is_minus_four


def as_parameter(p) -> KimParameter:
    return p if isinstance(p, KimParameter) else KimParameter(p)


def kim_num(lam: complex) -> Polynomial:
    # -z^4 (1 - lam + 4z + 6z^2 + 4z^3 + z^4)
    return Polynomial((0, 0, 0, 0, -(1 - lam), -4, -6, -4, -1))


def kim_den(lam: complex) -> Polynomial:
    return Polynomial((-1, -4, -6, -4, lam - 1))


def quartic(lam: complex) -> Polynomial:
    """lam(1 - z + z^2 - z^3 + z^4) - (1+z)^4, the free-critical factor of O'."""
    return Polynomial((lam - 1, -lam - 4, lam - 6, -lam - 4, lam - 1))


def kim_dnum(lam: complex) -> Polynomial:
    # -4 z^3 (1+z)^4 * quartic(lam)
    return Polynomial((0, 0, 0, -4)) * Polynomial((1, 4, 6, 4, 1)) * quartic(lam)


# exact common factors of num and den at the special parameters
_COMMON_FACTORS = {
    "zero": Polynomial((1, 4, 6, 4, 1)),  # (1+z)^4
    "sixteen": Polynomial((-1, 1)),  # z - 1
    "minus_four": Polynomial((1, 0, 1)),  # z^2 + 1
}


def build_operator(p) -> RationalOperator:
    """The conjugated Kim operator for parameter ``p``.

    At lam in {0, 16, -4} numerator and denominator share an exact factor,
    which is divided out so evaluation near it stays accurate.
    """
    p = as_parameter(p)
    lam = p.lam
    num, den = kim_num(lam), kim_den(lam)
    label = f"kim(lam={lam.real:g}{lam.imag:+g}i)"
    for name, factor in _COMMON_FACTORS.items():
        if getattr(p, f"is_{name}"):
            num, rn = poly_divmod(num, factor)
            den, rd = poly_divmod(den, factor)
            assert rn.scale < 1e-12 and rd.scale < 1e-12
            return RationalOperator.from_pair(num, den, label)
    # the closed-form derivative, checked against the quotient rule on construction
    return RationalOperator(num, den, kim_dnum(lam), den * den, label)


def derivative_formula(z: complex, lam: complex) -> complex:
    """O'(z, lam) from its factored closed form (no common-factor removal)."""
    q = lam * (1 - z + z**2 - z**3 + z**4) - (1 + z) ** 4
    d = 1 + 4 * z + 6 * z**2 + 4 * z**3 - (lam - 1) * z**4
    return -4 * z**3 * (1 + z) ** 4 * q / d**2


def multiplier_at_one(p) -> complex:
    p = as_parameter(p)
    if p.is_sixteen:
        raise UndefinedAtSixteen("z=1 is not a fixed point at lam=16")
    value = 64 / (16 - p.lam)
    check = derivative_formula(1.0, p.lam)
    if abs(check - value) > 1e-10 * abs(value):
        raise ArithmeticError(f"O'(1) = {check} disagrees with 64/(16-lam) = {value}")
    return value


class _NotFixed:
    def __repr__(self):
        return "NOT_FIXED"


NOT_FIXED = _NotFixed()


def classify_one(p, tol: float = 1e-9):
    """Character of z=1 from the disk test |lam-16| vs 64.

    Returns NOT_FIXED at lam=16. At lam=1 the point is still fixed
    (O(1,1) = 15/15) and is reported as repelling.
    """
    p = as_parameter(p)
    if p.is_sixteen:
        return NOT_FIXED
    m = multiplier_at_one(p)
    r = abs(p.lam - 16)
    if abs(r - 64) <= tol * 64:
        kind = Kind.PARABOLIC
    elif r > 64:
        kind = Kind.ATTRACTING
    else:
        kind = Kind.REPELLING
    return FixedPointReport(1 + 0j, m, kind, True)


def fixed_points(p, tol: float = 1e-12) -> list[FixedPointReport]:
    return _fixed_points(build_operator(p), root_tol=tol)


class Provenance(enum.Enum):
    CLOSED_FORM = "closed-form"
    QUARTIC_ROOTS = "quartic-roots"
    SPECIAL_CASE = "special-case"


@dataclass(frozen=True)
class CriticalSet:
    """Free critical points: -1 first, then the P1 pair, then the P2 pair."""

    points: tuple
    provenance: Provenance
    pairs: tuple = ()
    closed_form_agreement: tuple = ()


def closed_form_critical(lam: complex) -> tuple:
    """cr1..cr4 from radicals on principal branches.

    Uses center (1 + 5/(lam-1))/4 and +beta in cr4, which is what makes the
    four values roots of the quartic factor and gives cr1*cr2 = cr3*cr4 = 1.
    """
    lam = complex(lam)
    if lam == 1 or lam == 0:
        raise ValueError("closed forms need lam not in {0, 1}")
    s = cmath.sqrt
    beta = s(5) * s((lam - 1) ** 2) * s(lam * (4 + lam)) / (lam - 1) ** 2
    a = -5 * lam * (6 - 7 * lam + lam**2) / (lam - 1) ** 3
    b = (4 + lam) * beta / (lam - 1)
    c = 1 + 5 / (lam - 1)
    return (
        0.25 * (c - beta - SQRT2 * s(a - b)),
        0.25 * (c - beta + SQRT2 * s(a - b)),
        0.25 * (c + beta - SQRT2 * s(a + b)),
        0.25 * (c + beta + SQRT2 * s(a + b)),
    )


_MATCHINGS = (((0, 1), (2, 3)), ((0, 2), (1, 3)), ((0, 3), (1, 2)))


def pair_roots(roots: np.ndarray) -> np.ndarray:
    """Group quartic roots of shape (n, 4) into reciprocal pairs.

    Returns (n, 2, 2): two pairs per row, the P1 pair first. P1 is the pair
    nearest (chordally) to the lam=16 limits cr1(16), cr2(16); ties go to the
    pair holding the member of smallest argument.
    """
    r = np.asarray(roots, dtype=complex)
    n = r.shape[0]
    with np.errstate(all="ignore"):
        inv = 1.0 / r
    err = np.empty((n, 3))
    for k, ((a, b), (c, d)) in enumerate(_MATCHINGS):
        err[:, k] = (
            chordal_array(r[:, a], inv[:, b])
            + chordal_array(r[:, c], inv[:, d])
        )
    best = np.argmin(np.nan_to_num(err, nan=np.inf), axis=1)
    idx = np.array(_MATCHINGS)[best]  # (n, 2, 2)
    pairs = np.take_along_axis(r[:, None, :].repeat(2, axis=1), idx, axis=2)

    score = np.empty((n, 2))
    for k in range(2):
        score[:, k] = np.minimum.reduce(
            [chordal_array(pairs[:, k, m], t) for m in range(2) for t in (CR1_16, CR2_16)]
        )
    score = np.round(score, 12)
    ang = np.angle(pairs)
    first = score[:, 0] < score[:, 1]
    tie = score[:, 0] == score[:, 1]
    first |= tie & (ang[:, 0].min(axis=1) <= ang[:, 1].min(axis=1))
    return np.where(first[:, None, None], pairs, pairs[:, ::-1, :])


def representative(pair) -> complex:
    """The member of a reciprocal pair with the smallest argument."""
    return min(pair, key=lambda u: (cmath.phase(u), abs(u)))


def critical_points(p, tol: float = 1e-12) -> CriticalSet:
    """Free critical points: z=-1 and the roots of the quartic factor of O'."""
    p = as_parameter(p)
    if p.is_zero:
        return CriticalSet((), Provenance.SPECIAL_CASE)
    if p.is_sixteen:
        pairs = ((CR1_16, CR2_16), (1 + 0j, 1 + 0j))
        return CriticalSet((-1 + 0j, CR1_16, CR2_16, 1 + 0j), Provenance.SPECIAL_CASE, pairs)
    if p.is_minus_four:
        pairs = ((-1j, 1j), (-1j, 1j))
        return CriticalSet((-1 + 0j, -1j, 1j), Provenance.SPECIAL_CASE, pairs)
    if p.is_one:
        w = (OMEGA.conjugate(), OMEGA)
        return CriticalSet((-1 + 0j, *w), Provenance.SPECIAL_CASE, (w,))
    rs = find_roots(quartic(p.lam), tol=tol)
    pairs = pair_roots(np.array([rs.roots]))[0]
    pairs = tuple(tuple(complex(u) for u in pr) for pr in pairs)
    points = (-1 + 0j, *pairs[0], *pairs[1])
    agreement = tuple(
        bool(np.min(np.abs(np.array(rs.roots) - c)) < 1e-8) for c in closed_form_critical(p.lam)
    )
    return CriticalSet(points, Provenance.QUARTIC_ROOTS, pairs, agreement)


def select_critical(p, which: str) -> complex:
    """Seed of the P1 (cr1/cr2) or P2 (cr3/cr4) parameter plane."""
    p = as_parameter(p)
    k = _which_index(which)
    if p.is_zero:
        raise NoFreeCritical("lam=0 has no free critical points")
    cs = critical_points(p)
    pair = cs.pairs[min(k, len(cs.pairs) - 1)]
    return representative(pair)


def _which_index(which: str) -> int:
    w = str(which).upper()
    if w not in ("P1", "P2"):
        raise ValueError(f"which must be P1 or P2, got {which!r}")
    return 0 if w == "P1" else 1


def select_critical_batch(lams: np.ndarray, which: str, tol: float = 1e-12) -> np.ndarray:
    """Vectorised select_critical for generic (non-special) parameters."""
    k = _which_index(which)
    lams = np.asarray(lams, dtype=complex).ravel()
    coeffs = np.stack([lams - 1, -lams - 4, lams - 6, -lams - 4, lams - 1], axis=1)
    roots, _, _ = aberth_batch(coeffs, tol=tol)
    pair = pair_roots(roots)[:, k, :]
    ang = np.angle(pair)
    pick0 = (ang[:, 0] < ang[:, 1]) | ((ang[:, 0] == ang[:, 1]) & (np.abs(pair[:, 0]) <= np.abs(pair[:, 1])))
    return np.where(pick0, pair[:, 0], pair[:, 1])


# un-conjugated iteration


def kim_step(f, df, x: complex, lam: complex) -> complex:
    """One step of the two-step scheme with eta = mu = 0 on an analytic f."""
    fx = f(x)
    if fx == 0:
        return x
    dfx = df(x)
    if dfx == 0:
        raise DerivativeZero(f"f'(x) = 0 at x={x}")
    y = x - fx / dfx
    fy = f(y)
    u = fy / fx
    w = 1 - 2 * u
    if w == 0:
        raise DenominatorZero(f"1 - 2u = 0 at x={x}")
    return y - (1 + lam * u * u) / w * fy / dfx


def original_step(f_roots, x: complex, p) -> complex:
    a, b = (complex(v) for v in f_roots)
    if a == b:
        raise ValueError("roots must be distinct")
    lam = as_parameter(p).lam
    return kim_step(lambda t: (t - a) * (t - b), lambda t: 2 * t - a - b, complex(x), lam)


def mobius(a: complex, b: complex, u: ExtendedComplex) -> ExtendedComplex:
    """(u - a)/(u - b): sends a to 0, b to infinity, infinity to 1."""
    if a == b:
        raise ValueError("a and b must differ")
    if u is INFINITY:
        return 1 + 0j
    if u == b:
        return INFINITY
    return extended((u - a) / (u - b))


def mobius_inverse(a: complex, b: complex, v: ExtendedComplex) -> ExtendedComplex:
    if a == b:
        raise ValueError("a and b must differ")
    if v is INFINITY:
        return complex(b)
    if v == 1:
        return INFINITY
    return extended((v * b - a) / (v - 1))


def scaling_conjugacy_check(
    g_roots,
    affine,
    samples: int,
    gamma: complex = 1.0,
    lam: complex = 2 + 1j,
    seed: int = 0,
) -> float:
    """Max chordal gap between A o O_h o A^-1 and O_g, with h = gamma * g o A."""
    a, b = (complex(v) for v in g_roots)
    a1, a2 = (complex(v) for v in affine)
    if a1 == 0:
        raise ValueError("affine slope must be nonzero")
    lam = as_parameter(lam).lam
    gamma = complex(gamma)

    def g(t):
        return (t - a) * (t - b)

    def dg(t):
        return 2 * t - a - b

    def h(t):
        return gamma * g(a1 * t + a2)

    def dh(t):
        return gamma * a1 * dg(a1 * t + a2)

    rng = np.random.default_rng(seed)
    center = (a + b) / 2
    spread = max(abs(a - b), 1.0)
    worst = 0.0
    for re, im in rng.uniform(-2, 2, size=(samples, 2)):
        z = center + spread * complex(re, im)
        lhs = a1 * kim_step(h, dh, (z - a2) / a1, lam) + a2
        rhs = kim_step(g, dg, z, lam)
        worst = max(worst, chordal(extended(lhs), extended(rhs)))
    return worst


def conjugacy_gap(a: complex, b: complex, x: complex, p) -> float:
    """Chordal distance between M(original_step(x)) and O_p(M(x))."""
    p = as_parameter(p)
    lhs = mobius(a, b, extended(original_step((a, b), x, p)))
    rhs = apply(build_operator(p), mobius(a, b, x))
    return chordal(lhs, rhs)
