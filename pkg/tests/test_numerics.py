import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sptrade import numerics
from sptrade.numerics import (DegenerateGradientError, DinkelbachError, Ellipsoid,
                              NoSignChangeError, bisect, central_cut, dinkelbach_solve,
                              ellipsoid_converged, ellipsoid_step, golden_section_max, lambert_w0)

# W(1) by bisection on w e^w - 1 over [0, 1], 200 halvings (independent of the Halley code)
_lo, _hi = 0.0, 1.0
for _ in range(200):
    _m = 0.5 * (_lo + _hi)
    _lo, _hi = (_m, _hi) if _m * math.exp(_m) < 1.0 else (_lo, _m)
OMEGA = 0.5 * (_lo + _hi)


def test_lambert_special_values():
    assert lambert_w0(0.0) == 0.0
    assert lambert_w0(math.e) == pytest.approx(1.0, abs=1e-15)
    assert lambert_w0(1.0) == pytest.approx(OMEGA, abs=1e-15)
    assert OMEGA == pytest.approx(0.567143, abs=1e-6)
    assert lambert_w0(-1.0 / math.e) == pytest.approx(-1.0, abs=1e-7)


def test_lambert_domain_error():
    with pytest.raises(ValueError):
        lambert_w0(-0.5)
    with pytest.raises(ValueError):
        lambert_w0(float("nan"))


def test_lambert_residual_log_grid():
    xs = np.logspace(-6, 6, 1000)
    res = [abs(lambert_w0(x) * math.exp(lambert_w0(x)) - x) / max(x, 1.0) for x in xs]
    assert max(res) <= 1e-10


def test_lambert_near_branch_point():
    for d in (1e-14, 1e-10, 1e-6, 1e-3, 0.1):
        x = -1.0 / math.e + d
        w = lambert_w0(x)
        assert w >= -1.0
        assert abs(w * math.exp(w) - x) <= 1e-12


@settings(max_examples=300, deadline=None)
@given(st.floats(min_value=-1.0 / math.e + 1e-12, max_value=1e12))
def test_lambert_residual_property(x):
    w = lambert_w0(x)
    assert w >= -1.0
    assert abs(w * math.exp(w) - x) <= 1e-12 * max(abs(x), 1.0)


def test_lambert_bisect_fallback_agrees():
    for x in (1e-3, 0.5, 7.0, 1e4):
        assert numerics._lambert_bisect(x) == pytest.approx(lambert_w0(x), rel=1e-12)


def test_bisect_examples():
    assert bisect(lambda x: x - 2.0, 0.0, 10.0, tol=1e-9) == pytest.approx(2.0, abs=1e-9)
    assert bisect(lambda x: x * x - 2.0, 0.0, 2.0, tol=1e-9) == pytest.approx(math.sqrt(2.0), abs=1e-9)
    with pytest.raises(NoSignChangeError):
        bisect(lambda x: x * x + 1.0, 0.0, 2.0)
    with pytest.raises(ValueError):
        bisect(lambda x: x, 1.0, 0.0)


def test_bisect_decreasing_and_endpoint_roots():
    assert bisect(lambda x: 3.0 - x, 0.0, 5.0, tol=1e-12) == pytest.approx(3.0, abs=1e-12)
    assert bisect(lambda x: x, 0.0, 1.0) == 0.0
    assert bisect(lambda x: x - 1.0, 0.0, 1.0) == 1.0


def test_golden_section_examples():
    x, fx = golden_section_max(lambda x: -(x - 3.0) ** 2, 0.0, 10.0, tol=1e-9)
    assert x == pytest.approx(3.0, abs=1e-8)
    assert fx == -(x - 3.0) ** 2
    x, fx = golden_section_max(lambda x: x, 0.0, 1.0)
    assert x == 1.0 and fx == 1.0
    # dense scan of x e^-x
    grid = np.linspace(0.0, 10.0, 1_000_001)
    x_grid = grid[np.argmax(grid * np.exp(-grid))]
    x, _ = golden_section_max(lambda x: x * math.exp(-x), 0.0, 10.0, tol=1e-9)
    assert x == pytest.approx(x_grid, abs=2e-5)
    assert x == pytest.approx(1.0, abs=1e-6)


def test_ellipsoid_axis_cut():
    e = Ellipsoid.sphere((1.0, 1.0), 10.0)
    e2 = ellipsoid_step(e, (1.0, 0.0), project=False)
    assert e2.center[0] < 1.0
    assert e2.center[1] == 1.0
    assert e2.volume_measure() < e.volume_measure()
    assert np.allclose(e2.shape, e2.shape.T)


def test_ellipsoid_volume_ratio():
    rng = np.random.default_rng(3)
    e = Ellipsoid.sphere((1.0, 1.0), 100.0)
    for _ in range(100):
        g = rng.normal(size=2)
        e2 = ellipsoid_step(e, g, project=False)
        # det ratio for n = 2 central cut: (4/3)^2 * (1/3) = 16/27
        assert e2.volume_measure() / e.volume_measure() == pytest.approx(16.0 / 27.0, rel=1e-9)
        assert np.all(np.linalg.eigvalsh(e2.shape) > 0)
        e = e2


def test_ellipsoid_matches_textbook_update():
    rng = np.random.default_rng(11)
    P = np.array([[4.0, 1.0], [1.0, 2.0]])
    c = np.array([0.5, 2.0])
    g = rng.normal(size=2)
    gt = P @ g / math.sqrt(g @ P @ g)
    c_ref = c - gt / 3.0
    P_ref = 4.0 / 3.0 * (P - 2.0 / 3.0 * np.outer(gt, gt))
    e = ellipsoid_step(Ellipsoid(c, P), g, project=False)
    assert np.allclose(e.center, c_ref, rtol=1e-14)
    assert np.allclose(e.shape, P_ref, rtol=1e-14)


def test_ellipsoid_projection_and_errors():
    e = Ellipsoid.sphere((0.1, 1.0), 10.0)
    e2 = ellipsoid_step(e, (1.0, 0.0))
    assert e2.center[0] == 0.0
    with pytest.raises(DegenerateGradientError):
        ellipsoid_step(e, (0.0, 0.0))
    with pytest.raises(DegenerateGradientError):
        ellipsoid_step(e, (np.inf, 0.0))


def test_ellipsoid_one_dimension_halves():
    e = Ellipsoid.sphere((5.0,), 4.0)
    e = ellipsoid_step(e, (1.0,), project=False)
    assert e.center[0] == 3.0
    assert e.shape[0, 0] == 4.0
    c, P = central_cut([3.0], [[4.0]], [-2.0])
    assert c == [4.0] and P == [[1.0]]


def test_ellipsoid_converged_examples():
    g = np.array([1.0, 0.0])
    assert ellipsoid_converged(Ellipsoid.sphere((0, 0), 1e-10), g, 1e-6)
    assert not ellipsoid_converged(Ellipsoid.sphere((0, 0), 10.0), g, 1e-6)
    assert ellipsoid_converged(Ellipsoid.sphere((0, 0), 2.0), g, 2.0)


def _toy_subgradient(c):
    a, b = c[0] - 2.0, c[1] - 3.0
    if abs(a) >= abs(b):
        return np.array([math.copysign(1.0, a), 0.0]) if a else np.zeros(2)
    return np.array([0.0, math.copysign(1.0, b)])


def test_ellipsoid_toy_problem():
    e = Ellipsoid.sphere((1.0, 1.0), 100.0)
    best, best_f = e.center, math.inf
    for _ in range(200):
        f = max(abs(e.center[0] - 2.0), abs(e.center[1] - 3.0))
        if f < best_f:
            best, best_f = e.center, f
        g = _toy_subgradient(e.center)
        if not np.any(g):
            break
        e = ellipsoid_step(e, g)
    assert np.allclose(best, (2.0, 3.0), atol=1e-3)


def _toy_inner(q):
    # max over x in [0, 2] of (2x - x^2) - q (1 + x): x = 1 - q/2
    x = min(max(1.0 - q / 2.0, 0.0), 2.0)
    R, P = 2.0 * x - x * x, 1.0 + x
    return R - q * P, R, P


def test_dinkelbach_toy_against_grid():
    xs = np.arange(0.0, 2.0 + 1e-7, 1e-6)
    q_grid = float(np.max((2 * xs - xs ** 2) / (1 + xs)))
    st = dinkelbach_solve(_toy_inner, q0=1.0, epsilon=1e-12)
    assert st.q == pytest.approx(q_grid, rel=1e-9)
    assert st.q == pytest.approx(4.0 - 2.0 * math.sqrt(3.0), rel=1e-12)


def test_dinkelbach_monotone_from_below():
    st = dinkelbach_solve(_toy_inner, q0=0.0, epsilon=1e-12)
    assert all(b >= a for a, b in zip(st.history, st.history[1:]))
    assert all(r >= 0 for r in st.residuals)


def test_dinkelbach_start_above_optimum():
    # one drop below q0, then nondecreasing; a one-sided stop would quit at q0
    st = dinkelbach_solve(_toy_inner, q0=1.0, epsilon=1e-10)
    h = st.history
    assert h[1] < h[0]
    assert all(b >= a - 1e-15 for a, b in zip(h[1:], h[2:]))


def test_dinkelbach_constant_ratio_and_loose_tol():
    st = dinkelbach_solve(lambda q: (10.0 - 2.0 * q, 10.0, 2.0), q0=1.0)
    assert st.q == 5.0 and st.iteration == 2
    st = dinkelbach_solve(_toy_inner, q0=1.0, epsilon=1e9)
    assert st.iteration == 1


def test_dinkelbach_errors():
    with pytest.raises(DinkelbachError):
        dinkelbach_solve(lambda q: (1.0, 1.0, 0.0))
    # ratio that never settles: R/P alternates
    flip = {"n": 0}

    def inner(q):
        flip["n"] += 1
        R = 2.0 if flip["n"] % 2 else 3.0
        return R - q, R, 1.0

    with pytest.raises(DinkelbachError):
        dinkelbach_solve(inner, max_iter=10)
