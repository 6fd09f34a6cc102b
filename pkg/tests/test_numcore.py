import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from basinscope.errors import NonConvergence
from basinscope.numcore import (
    INFINITY,
    Polynomial,
    chordal,
    dedupe,
    eval_poly,
    extended,
    find_roots,
    isclose,
    poly_arith,
    poly_derivative,
    poly_divmod,
    reciprocal,
    residuals,
)
from basinscope.kimfamily import kim_den, kim_num
from basinscope.rational import apply
from basinscope.kimfamily import build_operator

coeff = st.complex_numbers(max_magnitude=1.0, allow_nan=False, allow_infinity=False)


def P(*c):
    return Polynomial(tuple(c))


# sphere helpers


def test_extended_maps_nonfinite_to_infinity():
    assert extended(complex(math.inf, 0)) is INFINITY
    assert extended(complex(0, math.nan)) is INFINITY
    assert extended(2 + 1j) == 2 + 1j


def test_reciprocal_swaps_zero_and_infinity():
    assert reciprocal(0j) is INFINITY
    assert reciprocal(INFINITY) == 0
    assert reciprocal(2j) == -0.5j


def test_chordal_values():
    assert chordal(INFINITY, INFINITY) == 0
    assert chordal(0j, INFINITY) == pytest.approx(2.0)
    assert chordal(1 + 0j, -1 + 0j) == pytest.approx(2.0)
    assert chordal(1e200 + 0j, INFINITY) < 1e-150
    assert isclose(1 + 0j, 1 + 1e-12j, 1e-10)


@given(coeff, coeff)
def test_chordal_symmetric_and_bounded(z, w):
    d = chordal(z, w)
    assert d == pytest.approx(chordal(w, z))
    assert 0 <= d <= 2 + 1e-12


# polynomials


def test_normalisation():
    p = P(1, 2, 0, 0)
    assert p.coeffs == (1, 2)
    assert p.degree == 1
    assert P(0, 0).is_zero and P(0, 0).degree == 0


def test_eval_poly_examples():
    assert eval_poly(P(1, 4, 6, 4, 1), -1 + 0j) == 0
    assert eval_poly(P(0, 0, 0, 0, 1), 2 + 0j) == 16
    assert eval_poly(P(-1, -4, -6, -4, 15), -1 + 0j) == 16
    assert eval_poly(P(3, 1), INFINITY) is INFINITY
    assert eval_poly(P(5), INFINITY) == 5


def test_eval_poly_overflow_is_infinity():
    assert eval_poly(P(0, 0, 0, 0, 0, 0, 0, 0, 1), 1e100 + 0j) is INFINITY


def test_derivative_examples():
    assert poly_derivative(P(0, 0, 0, 0, 1)).coeffs == (0, 0, 0, 4)
    assert poly_derivative(P(5)).is_zero
    assert poly_derivative(P(1, 4, 6, 4, 1)).coeffs == (4, 12, 12, 4)


def test_arith_examples():
    assert poly_arith(P(-1, 1), P(1, 1), "mul").coeffs == (-1, 0, 1)
    z4 = P(0, 0, 0, 0, 1)
    assert poly_arith(z4, z4, "sub").is_zero
    with pytest.raises(ValueError):
        poly_arith(z4, z4, "div")


def test_fixed_point_polynomial_at_two():
    F = poly_arith(kim_num(2), poly_arith(P(0, 1), kim_den(2), "mul"), "sub")
    assert F.degree == 8
    op = build_operator(2)
    for z in (0.3 + 0.1j, -1.2 + 0.5j, 2j, 0.7, -0.4 - 0.9j):
        direct = kim_num(2)(z) - z * kim_den(2)(z)
        assert F(z) == pytest.approx(direct, rel=1e-12)
    roots = find_roots(F).roots
    assert len(roots) == 8
    assert min(abs(r) for r in roots) < 1e-12
    assert min(abs(r - 1) for r in roots) < 1e-10
    for r in roots:
        assert abs(apply(op, r) - r) < 1e-8


def test_divmod_exact():
    q, r = poly_divmod(P(-1, 0, 1), P(1, 1))
    assert q.coeffs == (-1, 1) and r.is_zero
    with pytest.raises(ZeroDivisionError):
        poly_divmod(P(1, 1), P(0))


small_int = st.integers(-1000, 1000).map(complex)


@given(st.lists(small_int, min_size=1, max_size=6), st.lists(small_int, min_size=1, max_size=6))
def test_derivative_commutes_with_add(a, b):
    pa, pb = Polynomial(tuple(a)), Polynomial(tuple(b))
    lhs = poly_derivative(pa + pb)
    rhs = poly_derivative(pa) + poly_derivative(pb)
    assert lhs == rhs


@given(st.lists(coeff, min_size=1, max_size=9), st.complex_numbers(max_magnitude=10, allow_nan=False, allow_infinity=False))
def test_horner_matches_power_sum(c, z):
    p = Polynomial(tuple(c))
    naive = sum(ck * z**k for k, ck in enumerate(p.coeffs))
    bound = sum(abs(ck) * abs(z) ** k for k, ck in enumerate(p.coeffs))
    assert abs(p(z) - naive) <= 1e-12 * max(bound, 1e-300)


# roots


def test_roots_of_z2_plus_1():
    rs = find_roots(P(1, 0, 1))
    got = sorted(rs.roots, key=lambda z: z.imag)
    assert abs(got[0] + 1j) < 1e-12 and abs(got[1] - 1j) < 1e-12


def test_roots_of_multiple_root_cluster():
    rs = find_roots(P(1, 4, 6, 4, 1), strict=False)
    assert len(rs.roots) == 4
    assert all(abs(r + 1) < 1e-3 for r in rs.roots)


def test_nonconvergence_carries_best():
    p = P(1, 4, 6, 4, 1)
    with pytest.raises(NonConvergence) as exc:
        find_roots(p, tol=1e-300, max_sweeps=3)
    assert exc.value.best is not None and len(exc.value.best.roots) == 4


def test_find_roots_rejects_constants():
    with pytest.raises(ValueError):
        find_roots(P(3))


@given(st.lists(coeff, min_size=2, max_size=11).filter(lambda c: abs(c[-1]) > 0.1))
def test_roots_reconstruct_polynomial(c):
    p = Polynomial(tuple(c))
    rs = find_roots(p, strict=False)
    assert len(rs.roots) == p.degree
    if rs.converged:
        assert np.all(residuals(p, rs.roots) <= 1e-12)
    rebuilt = Polynomial.from_roots(rs.roots, p.lead)
    err = max(abs(a - b) for a, b in zip(rebuilt.coeffs, p.coeffs))
    assert err <= 1e-6 * max(abs(x) for x in p.coeffs)


def test_random_degree_ten_batch(rng):
    for _ in range(50):
        d = int(rng.integers(1, 11))
        c = rng.uniform(-1, 1, d + 1) + 1j * rng.uniform(-1, 1, d + 1)
        c[-1] = 0.5 + 0.5j
        p = Polynomial(tuple(c))
        rs = find_roots(p)
        assert rs.converged
        assert np.all(residuals(p, rs.roots) <= 1e-12)


def test_dedupe():
    pts = [1 + 0j, 1 + 1e-9j, 2 + 0j, INFINITY, 1e20 + 0j]
    assert dedupe(pts, 1e-6) == [1 + 0j, 2 + 0j, INFINITY]
