"""Package results against frozen high-precision references."""
import math

import numpy as np
import pytest

from conftest import frozen_operator
from specidem.contour import build_contour
from specidem.core import assemble_core, borel_matrix, borel_series, invert_core
from specidem.generators import geometric_family
from specidem.idempotent import delta_membership, half_plane_idempotent
from specidem.io import from_pairs
from specidem.oracle import HalfPlane, dense_eig, riesz_oracle


def test_two_by_two_eigenvalues(two_by_two, frozen):
    mu = np.sort(dense_eig(two_by_two).values.real)[::-1]
    np.testing.assert_allclose(mu, frozen["two_by_two"]["eigenvalues"], atol=1e-14)


def test_two_by_two_projector(two_by_two, frozen):
    P = from_pairs(frozen["two_by_two"]["P_plus"])
    J = half_plane_idempotent(two_by_two, 0.0).J
    assert np.linalg.norm(J - P, 2) < 1e-12
    assert np.linalg.norm(riesz_oracle(two_by_two, HalfPlane(0.0)) - P, 2) < 1e-12


def test_borel_and_core_inverse(frozen):
    e = frozen["core"]
    T = frozen_operator(e)
    z = complex(*e["z"])
    F = from_pairs(e["borel"])
    np.testing.assert_allclose(borel_matrix(T, z), F, rtol=1e-13, atol=1e-15)
    assert borel_series(T, 2, 0, z) == pytest.approx(F[2, 0], rel=1e-13)
    A = invert_core(assemble_core(T, z)).A
    np.testing.assert_allclose(A, from_pairs(e["A"]), rtol=1e-12, atol=1e-14)


@pytest.mark.parametrize("k", range(3))
def test_riesz_projectors(frozen, k):
    e = frozen["riesz"][k]
    T = frozen_operator(e)
    P = from_pairs(e["P_plus"])
    J = half_plane_idempotent(T, e["xi"]).J
    assert np.linalg.norm(J - P, 2) < 1e-10
    assert np.linalg.norm(riesz_oracle(T, HalfPlane(e["xi"])) - P, 2) < 1e-10


def test_geometric_weighted_sum(frozen):
    rep = delta_membership(geometric_family(60), 0.0)
    assert rep.weighted_alpha == pytest.approx(frozen["geometric_weighted"], rel=1e-12)
    assert rep.weighted_alpha == pytest.approx(2 / 3, rel=1e-12)


def test_corners_and_length(frozen):
    c = build_contour(np.array([0.9, -0.9]), 0.0)
    assert c.length == pytest.approx(frozen["gamma0_length"], rel=1e-14)
    assert c.length == pytest.approx(2 + math.pi, rel=1e-14)
    c3 = build_contour(np.array([0.9, -0.9]), 0.3)
    h = frozen["corner_0.3"]
    assert c3.half_height == pytest.approx(h, rel=1e-14)
    assert sorted(np.round(np.asarray(c3.corners), 12).tolist(), key=lambda z: z.imag) == \
        [complex(0.3, -round(h, 12)), complex(0.3, round(h, 12))]


def test_weight_constant_reference(frozen):
    from specidem.contour import contour_weight_constant
    e = frozen["weight_constant"]
    lam = np.array([complex(*e["lam"])])
    wc = contour_weight_constant(build_contour(lam, e["xi"]), lam)
    assert wc.value == pytest.approx(e["value"], rel=1e-10)
