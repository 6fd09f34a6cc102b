import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from basinscope.kimfamily import build_operator, select_critical
from basinscope.numcore import INFINITY, Polynomial, chordal
from basinscope.orbitengine import (
    AttractorList,
    Outcome,
    attracting_fixed_points,
    detect_cycle,
    iterate_batch,
    run_orbit,
)
from basinscope.rational import RationalOperator, apply

Z4 = build_operator(0)
ZERO_ONLY = AttractorList((0j,))


def test_z4_converges_to_zero():
    fate = run_orbit(Z4, 0.5, ZERO_ONLY, 20)
    assert fate.outcome is Outcome.CONVERGED and fate.attractor == 0
    assert fate.iterations <= 6


def test_z4_escapes():
    fate = run_orbit(Z4, 2, ZERO_ONLY, 20)
    assert fate.outcome is Outcome.ESCAPED and fate.iterations == 2


def test_seed_on_attractor_converges_in_one_step():
    fate = run_orbit(build_operator(100), 1 + 0j, AttractorList((0j, 1 + 0j)), 20)
    assert fate.outcome is Outcome.CONVERGED and fate.attractor == 1 and fate.iterations == 1


def test_infinity_seed_escapes():
    assert run_orbit(Z4, INFINITY, ZERO_ONLY, 5).outcome is Outcome.ESCAPED


def test_undecided_on_julia_set():
    fate = run_orbit(Z4, 1 + 0j, ZERO_ONLY, 30, trace=True)
    assert fate.outcome is Outcome.UNDECIDED and fate.iterations == 30
    assert len(fate.trace) == 31 and fate.trace[0] == 1


def test_run_orbit_validates():
    with pytest.raises(ValueError):
        run_orbit(Z4, 0.5, ZERO_ONLY, 0)
    with pytest.raises(ValueError):
        run_orbit(Z4, 0.5, ZERO_ONLY, 5, conv_tol=0)
    with pytest.raises(ValueError):
        run_orbit(Z4, 0.5, ZERO_ONLY, 5, escape_radius=1)


def test_attractor_list_distinctness():
    with pytest.raises(ValueError):
        AttractorList((0j, 1e-3 + 0j), tol=1e-3)


def test_run_orbit_reports_cycle():
    fate = run_orbit(build_operator(16), -1 + 0.01j, ZERO_ONLY, 50, max_period=4)
    assert fate.outcome is Outcome.CYCLE and fate.period == 2


def test_cycle_at_sixteen():
    period, pts = detect_cycle(build_operator(16), -1 + 0j)
    assert period == 2
    assert min(abs(p + 1) for p in pts) < 1e-6 and min(abs(p - 1) for p in pts) < 1e-6


def test_no_cycle_for_fixed_point_convergence():
    assert detect_cycle(Z4, 0.5) is None


def test_period_two_in_large_bulb_of_p2():
    lam = 50 + 0j
    period, pts = detect_cycle(build_operator(lam), select_critical(lam, "P2"), warmup=1000, max_period=8)
    assert period == 2


def test_cycle_minimality():
    op = build_operator(16)
    period, pts = detect_cycle(op, -1 + 0.01j, cycle_tol=1e-6)
    z = pts[0]
    for d in range(1, period):
        if period % d == 0:
            w = z
            for _ in range(d):
                w = apply(op, w)
            assert chordal(w, z) >= 1e-6


def test_detect_cycle_validates():
    with pytest.raises(ValueError):
        detect_cycle(Z4, 0.5, max_period=1)


def test_attracting_fixed_points():
    assert attracting_fixed_points(Z4).points == (0j,)
    pts = attracting_fixed_points(build_operator(100)).points
    assert pts[0] == 0 and len(pts) == 2 and abs(pts[1] - 1) < 1e-9
    a80 = attracting_fixed_points(build_operator(80))
    assert len(a80) == 2 and abs(abs(a80.multipliers[1]) - 1) < 1e-9


def test_attracting_fallback_to_zero():
    # 3z + z^3 fixes 0 (multiplier 3) and +-i*sqrt(2) (multiplier -3), all repelling
    op = RationalOperator.from_pair(Polynomial((0, 3, 0, 1)), Polynomial((1,)))
    assert attracting_fixed_points(op).points == (0j,)


def test_deterministic():
    op = build_operator(3 + 4j)
    att = attracting_fixed_points(op)
    a = run_orbit(op, 0.7 + 0.2j, att, 100)
    b = run_orbit(op, 0.7 + 0.2j, att, 100)
    assert a == b


@given(st.floats(-1.5, 1.5), st.floats(-1.5, 1.5), st.integers(1, 30), st.integers(0, 30))
def test_monotone_classification(x, y, m1, extra):
    op = build_operator(100)
    att = attracting_fixed_points(op)
    lo = run_orbit(op, complex(x, y), att, m1)
    hi = run_orbit(op, complex(x, y), att, m1 + extra)
    if lo.outcome is not Outcome.UNDECIDED:
        assert (hi.outcome, hi.attractor, hi.iterations) == (lo.outcome, lo.attractor, lo.iterations)


def test_escape_soundness_radial_sample():
    for r in np.linspace(0.05, 1.95, 100):
        if abs(r - 1) < 0.02:
            continue
        z0 = r * np.exp(0.37j)
        fate = run_orbit(Z4, z0, ZERO_ONLY, 200)
        assert fate.outcome is (Outcome.CONVERGED if r < 1 else Outcome.ESCAPED)


def test_batch_matches_scalar(rng):
    op = build_operator(100)
    att = attracting_fixed_points(op)
    seeds = rng.uniform(-3, 3, 300) + 1j * rng.uniform(-3, 3, 300)
    labels, iters, failed = iterate_batch(op, seeds, att, 60)
    assert not failed.any()
    for s, lab, it in zip(seeds, labels, iters):
        fate = run_orbit(op, s, att, 60)
        if fate.outcome is Outcome.CONVERGED:
            assert (lab, it) == (fate.attractor, fate.iterations)
        elif fate.outcome is Outcome.ESCAPED:
            assert (lab, it) == (len(att), fate.iterations)
        else:
            assert (lab, it) == (-1, 60)


def test_batch_resolves_removable_points():
    # at lam=16 before deflation -1 is not special, but 0/0 points route to apply
    op = RationalOperator.from_pair(Polynomial((0, -1, 1)), Polynomial((-1, 1)))  # z(z-1)/(z-1)
    labels, iters, failed = iterate_batch(op, np.array([1 + 0j]), ZERO_ONLY, 3)
    assert not failed.any() and labels[0] == -1
