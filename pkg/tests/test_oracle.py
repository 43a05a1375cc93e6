import numpy as np
import pytest
from hypothesis import given, strategies as st

from specidem.errors import CollisionError, NearDefectiveError
from specidem.generators import random_instance
from specidem.oracle import (Empty, HalfPlane, Rectangle, Whole, commutant_basis, commutant_residual,
                             dense_eig, match_spectra, riesz_oracle)

seeds = st.integers(0, 5000)


def explicit_projector(T):
    """Closed form for the 2 x 2 example: P = (T - mu_- I) / (mu_+ - mu_-)."""
    M = T.dense()
    tr, det = np.trace(M), np.linalg.det(M)
    disc = np.sqrt(tr**2 / 4 - det)
    mp, mm = tr / 2 + disc, tr / 2 - disc
    return (M - mm * np.eye(2)) / (mp - mm)


def test_two_by_two_closed_form(two_by_two):
    P = riesz_oracle(two_by_two, HalfPlane(0.0))
    np.testing.assert_allclose(P, explicit_projector(two_by_two), atol=1e-14)
    mu = np.sort(dense_eig(two_by_two).values.real)
    np.testing.assert_allclose(mu, [0.01 - np.sqrt(0.2501), 0.01 + np.sqrt(0.2501)], atol=1e-15)


@given(st.integers(2, 24), st.integers(1, 4), seeds)
def test_eigensystem_consistency(N, R, seed):
    T, xi = random_instance(N, R, seed)
    eig = dense_eig(T)
    assert eig.simple and eig.residual < 1e-13 and eig.biorthogonality() < 1e-9
    P = riesz_oracle(T, HalfPlane(xi, "plus"))
    Q = riesz_oracle(T, HalfPlane(xi, "minus"))
    np.testing.assert_allclose(P + Q, np.eye(N), atol=1e-9)
    assert np.linalg.norm(P @ P - P, 2) < 1e-9 * (1 + np.linalg.norm(P, 2) ** 2)
    np.testing.assert_allclose(riesz_oracle(T, Whole()), np.eye(N), atol=1e-9)
    assert not np.any(riesz_oracle(T, Empty()))


def test_rectangle_region_and_collision():
    T, _ = random_instance(10, 2, 3)
    mu = dense_eig(T).values
    m = mu[0]
    box = Rectangle(m.real - 0.01, m.real + 0.01, m.imag - 0.01, m.imag + 0.01)
    if np.sum(box(mu)) == 1:
        P = riesz_oracle(T, box)
        assert np.linalg.matrix_rank(P, 1e-8) == 1
    with pytest.raises(CollisionError):
        riesz_oracle(T, HalfPlane(m.real))


def test_defective_rejected():
    J = np.array([[0.2, 1.0], [0.0, 0.2]])
    with pytest.raises(NearDefectiveError):
        riesz_oracle(J, HalfPlane(0.0))
    with pytest.raises(ValueError):
        commutant_basis(0.3 * np.eye(3))


@given(st.integers(2, 10), st.integers(1, 3), seeds)
def test_commutant_routes_agree(N, R, seed):
    T, _ = random_instance(N, R, seed)
    S = commutant_basis(T, "sylvester")
    E = commutant_basis(T, "eigen")
    assert S.shape == E.shape == (N, N, N)
    # same span: each eigen basis element is a combination of the Sylvester ones
    A = S.reshape(N, -1).T
    coef, *_ = np.linalg.lstsq(A, E.reshape(N, -1).T, rcond=None)
    assert np.linalg.norm(A @ coef - E.reshape(N, -1).T) < 1e-8
    Td = T.dense()
    for C in S:
        assert np.linalg.norm(C @ Td - Td @ C) < 1e-9


def test_commutant_residual_detects_non_spectral_matrix():
    T, xi = random_instance(8, 2, 9)
    basis = commutant_basis(T)
    P = riesz_oracle(T, HalfPlane(xi))
    assert commutant_residual(P, basis) < 1e-8
    assert commutant_residual(np.triu(np.ones((8, 8))), basis) > 1e-3
    with pytest.raises(ValueError):
        commutant_basis(T, "cholesky")


def test_match_spectra():
    assert match_spectra([1, 2j], [2j + 1e-9, 1]) == pytest.approx(1e-9)
    assert match_spectra([1, 2], [1]) == np.inf
    assert match_spectra([], []) == 0.0
