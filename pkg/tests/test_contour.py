import io
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from specidem.contour import (Piece, build_contour, contour_weight_constant, diag_power,
                              dump_rule_csv, fixed_rule, integrate, integrate_rule, principal_sqrt,
                              winding_inside, winding_number)
from specidem.errors import CollisionError, QuadratureError

finite = st.floats(-1e3, 1e3, allow_nan=False)


def test_principal_sqrt_branch():
    assert principal_sqrt(-1) == pytest.approx(-1j)
    assert principal_sqrt(1j) == pytest.approx(np.exp(1j * np.pi / 4))
    assert principal_sqrt(4) == pytest.approx(2)
    with pytest.raises(ValueError):
        principal_sqrt(0)


@given(finite, finite)
def test_principal_sqrt_squares_back(x, y):
    z = complex(x, y)
    if abs(z) < 1e-6:
        return
    r = principal_sqrt(z)
    assert abs(r * r - z) <= 1e-12 * abs(z)
    assert -np.pi / 2 <= np.angle(r) < np.pi / 2 or np.isclose(np.angle(r), np.pi / 2)


def test_diag_power_examples():
    lam = np.array([1.0, 0.0])
    np.testing.assert_allclose(diag_power(lam, -1.0, 0.5), [np.sqrt(2), 1.0])
    np.testing.assert_allclose(diag_power(np.array([0.0]), 1.0, 0.5), [-1j])
    np.testing.assert_allclose(diag_power(np.array([1j + 1]), 1.0, -1), [-1j])
    with pytest.raises(CollisionError):
        diag_power(lam, 1.0, -1)
    with pytest.raises(ValueError):
        diag_power(lam, 3.0, 2)


def test_contour_geometry():
    c = build_contour(np.array([0.5, -0.5]), 0.0, "plus")
    assert c.length == pytest.approx(2 + math.pi)
    top, bottom = c.corners
    assert top == pytest.approx(1j) and bottom == pytest.approx(-1j)
    assert c.region(np.array([0.5, -0.5, 0.0, 1.0, 1.2]) ).tolist() == [True, False, True, True, False]
    m = build_contour(np.array([0.5, -0.5]), 0.0, "minus")
    assert m.length == pytest.approx(2 + math.pi)
    assert c.clearance == pytest.approx(0.5) and c.real_margin == pytest.approx(0.5)


def test_build_contour_errors():
    with pytest.raises(CollisionError):
        build_contour(np.array([0.3 + 0.1j]), 0.3)
    with pytest.raises(ValueError):
        build_contour(None, 1.0)
    with pytest.raises(ValueError):
        build_contour(None, 0.0, "left")


@given(st.floats(-0.9, 0.9))
def test_orientation_and_winding(xi):
    for side, inside in (("plus", (xi + 1) / 2), ("minus", (xi - 1) / 2)):
        c = build_contour(None, xi, side)
        w = winding_number(c, [inside, -inside if abs(inside) > 0.05 else 5.0])
        assert abs(w[0] - 1) < 1e-9
        assert winding_inside(c, inside)


def test_plus_and_minus_tile_the_disc():
    xi = 0.2
    z0 = 0.1 + 0.3j
    f = lambda z: np.exp(z) / (z - z0)
    p = integrate(f, build_contour(None, xi, "plus")).value
    m = integrate(f, build_contour(None, xi, "minus")).value
    assert abs((p + m) / (2j * np.pi) - np.exp(z0)) < 1e-10
    assert abs(m / (2j * np.pi) - np.exp(z0)) < 1e-10


def test_winding_inside_refuses_curve_points():
    c = build_contour(None, 0.0)
    with pytest.raises(CollisionError):
        winding_inside(c, 0.0 + 0.2j)


@given(st.integers(0, 30), st.complex_numbers(max_magnitude=1.0))
def test_segment_panel_polynomial_exactness(k, a):
    """A 16-point panel integrates z^k exactly for k <= 31 on a segment."""
    p = Piece("segment", a, a + 0.5 - 0.25j)
    from specidem.contour import _panel
    _, z, w = _panel(p, 0.0, 1.0, 16)
    exact = (p.p1 ** (k + 1) - p.p0 ** (k + 1)) / (k + 1)
    assert abs(np.sum(w * z**k) - exact) <= 1e-13 * max(1.0, abs(exact))


@given(st.floats(-0.8, 0.8), st.floats(0.05, 0.95), st.floats(-0.9, 0.9))
def test_cauchy_formula(xi, frac, y):
    z0 = complex(xi + frac * (1 - xi), y)
    c = build_contour(None, xi, "plus")
    if abs(z0) > 0.95 or c.distance(z0) < 0.03:
        return
    val = integrate(lambda z: np.cos(z) / (z - z0) ** 2, c).value / (2j * np.pi)
    assert abs(val + np.sin(z0)) < 1e-10


def test_fixed_rule_convergence_rate_and_corner_splitting():
    c = build_contour(None, 0.3)
    z0 = 0.6 + 0.1j
    f = lambda z: 1.0 / (z - z0)
    errs = [abs(integrate_rule(f, fixed_rule(c, d)) - 2j * np.pi) for d in range(5)]
    for e0, e1 in zip(errs, errs[1:]):
        if e0 < 1e-12:
            break
        assert e1 <= e0 / 4
    assert min(errs) < 1e-12
    raw = [abs(integrate_rule(f, fixed_rule(c, d, split_corners=False)) - 2j * np.pi) for d in range(5)]
    assert any(e1 > e0 / 4 for e0, e1 in zip(raw, raw[1:]) if e0 > 1e-12)


@given(st.floats(0.05, 0.3), st.floats(-math.pi, math.pi))
def test_refinement_within_error_estimate(dist, ang):
    c = build_contour(None, 0.0)
    z0 = (1 - dist) * np.exp(1j * ang * 0.4)
    if c.distance(z0) < 0.01:
        return
    coarse = integrate(lambda z: 1 / (z - z0), c, tol=1e-8)
    fine = integrate(lambda z: 1 / (z - z0), c, tol=1e-13)
    assert abs(coarse.value - fine.value) <= 10 * coarse.error + 1e-14


def test_integrate_deterministic_and_shapes():
    c = build_contour(None, -0.1, "minus")
    def f(z):
        return np.outer(np.exp(z) / (z + 0.5), [1.0, 2.0])

    a, b = integrate(f, c), integrate(f, c)
    assert a.value.shape == (2,)
    assert np.array_equal(a.value, b.value) and np.array_equal(a.rule.nodes, b.rule.nodes)
    assert a.converged and a.rule.size == a.panels * 16
    np.testing.assert_allclose(integrate_rule(f, a.rule), a.value, atol=1e-13)
    np.testing.assert_allclose(a.value, 2j * np.pi * np.exp(-0.5) * np.array([1, 2]), atol=1e-11)
    L = integrate(lambda z: np.ones(z.shape), c, measure="ds").value
    assert L.real == pytest.approx(c.length, rel=1e-13)


def test_quadrature_error_carries_estimate():
    c = build_contour(None, 0.0)
    with pytest.raises(QuadratureError) as exc:
        integrate(lambda z: 1 / np.abs(z - 0.5j) ** 0.5, build_contour(None, 0.0), tol=1e-15, max_depth=3)
    assert exc.value.error > 0
    res = integrate(lambda z: 1 / np.abs(z - 0.5j) ** 0.5, c, tol=1e-15, max_depth=3, raise_on_failure=False)
    assert not res.converged


def test_weight_constant_stable_near_line():
    for d in (1e-1, 1e-2, 1e-3):
        lam = np.array([0.2 + d + 0.1j, 0.2 - d - 0.4j])
        c = build_contour(lam, 0.2)
        wc = contour_weight_constant(c, lam, refine=True)
        assert np.isfinite(wc.value) and wc.rel_change < 5e-4


def test_dump_rule_csv_columns():
    rule = fixed_rule(build_contour(None, 0.0), 0, order=4)
    buf = io.StringIO()
    text = dump_rule_csv(rule, buf)
    lines = text.splitlines()
    assert lines[0] == "panel,t,node_re,node_im,weight_re,weight_im"
    assert len(lines) == 1 + rule.size and buf.getvalue() == text
    row = lines[1].split(",")
    assert complex(float(row[2]), float(row[3])) == rule.nodes[0]
