import numpy as np
import pytest
from hypothesis import given, strategies as st

from conftest import make_operator
from specidem.errors import DimensionError, ZeroVectorError
from specidem.generators import (alternating_spectrum, clustered_divergent_instance,
                                 geometric_family, power_family, random_instance)
from specidem.model import (CoefficientFamily, SpectrumSpec, adjoint, build_operator, index_set,
                            normalize_to_disc, rotate, summability_gate)
from specidem.oracle import HalfPlane, Rectangle


def cplx(shape, seed):
    rng = np.random.default_rng(seed)
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)


@given(st.integers(1, 12), st.integers(1, 4), st.integers(0, 10**6))
def test_apply_matches_dense(N, R, seed):
    T = make_operator(cplx(N, seed), cplx((N, R), seed + 1), cplx((N, R), seed + 2))
    x = cplx(N, seed + 3)
    Td = T.dense()
    np.testing.assert_allclose(T.apply(x), Td @ x, atol=1e-12)
    np.testing.assert_allclose(T.apply_adjoint(x), Td.conj().T @ x, atol=1e-12)
    np.testing.assert_allclose(adjoint(T).dense(), Td.conj().T, atol=1e-14)
    assert np.linalg.norm(Td, 2) <= T.norm_estimate() * (1 + 1e-12)


@given(st.integers(2, 12), st.integers(1, 4), st.integers(0, 10**6))
def test_perturbation_rank_at_most_R(N, R, seed):
    T = make_operator(cplx(N, seed), cplx((N, R), seed + 1), cplx((N, R), seed + 2))
    K = T.dense() - np.diag(T.lambdas)
    s = np.linalg.svd(K, compute_uv=False)
    assert np.sum(s > 1e-10 * s[0]) <= R


def test_rotate_quarter_turn():
    T = geometric_family(10, 2)
    Tr = rotate(T, -1j)
    np.testing.assert_allclose(Tr.dense(), -1j * T.dense(), atol=1e-15)
    assert (Tr.spectrum.a, Tr.spectrum.b) == (T.spectrum.a_im, T.spectrum.b_im)
    assert Tr.spectrum.accumulation_declared


def test_validation():
    with pytest.raises(DimensionError):
        build_operator(SpectrumSpec([0.1, 0.2]), CoefficientFamily(np.ones((3, 1)), np.ones((3, 1))))
    with pytest.raises(ZeroVectorError):
        build_operator(SpectrumSpec([0.1, 0.2]), CoefficientFamily(np.zeros((2, 1)), np.ones((2, 1))))
    with pytest.raises(DimensionError):
        CoefficientFamily(np.ones((2, 1)), np.ones((2, 2)))
    with pytest.raises(ValueError):
        SpectrumSpec([0.0, np.nan])
    with pytest.raises(ValueError):
        SpectrumSpec([0.0, 1.2], normalized=True)
    with pytest.raises(ValueError):
        SpectrumSpec([0.0], a=0.5, b=0.1, accumulation_declared=True)


def test_normalize_example():
    u = np.array([[1e-3], [1e-3]])
    T = make_operator([2.0, -2.0], u, u)
    Tn, amap = normalize_to_disc(T, margin=0.1)
    assert amap.c == pytest.approx(0.45)
    np.testing.assert_allclose(Tn.lambdas, [0.9, -0.9])
    assert Tn.spectrum.normalized
    mu = np.linalg.eigvals(Tn.dense())
    assert np.max(np.abs(mu)) <= 0.95
    np.testing.assert_allclose(np.sort(amap.inverse(mu).real), np.sort(np.linalg.eigvals(T.dense()).real))


def test_normalize_identity_on_normalized_input():
    T, _ = random_instance(8, 1, 3)
    Tn, amap = normalize_to_disc(T)
    assert Tn is T and amap.is_identity


@given(st.integers(1, 30), st.floats(-0.9, 0.9))
def test_index_set_partition(N, xi):
    spec = alternating_spectrum(N, h=0.4)
    plus = index_set(spec, HalfPlane(xi, "plus"))
    minus = index_set(spec, HalfPlane(xi, "minus"))
    assert set(plus).isdisjoint(minus)
    on_line = np.flatnonzero(spec.lambdas.real == xi)
    assert sorted(set(plus) | set(minus) | set(on_line)) == list(range(N))


def test_index_set_rectangle_zero_based():
    spec = SpectrumSpec([0.5 + 0.1j, -0.5, 0.2j])
    assert index_set(spec, Rectangle(0.0, 1.0, 0.0, 0.5)).tolist() == [0]
    assert index_set(SpectrumSpec(np.zeros(0)), HalfPlane(0.0)).size == 0


@given(st.floats(0.05, 0.5), st.floats(1.01, 4.0))
def test_gate_monotone_in_scale(scale, factor):
    """Shrinking every coefficient can only lower the log-weighted sum."""
    T = power_family(30, 1, p=1.0, scale=scale)
    big = power_family(30, 1, p=1.0, scale=min(scale * factor, 0.99))
    r1, r2 = summability_gate(T.coeffs), summability_gate(big.coeffs)
    assert r1.log_sum_alpha <= r2.log_sum_alpha + 1e-15
    assert r1.tail <= r2.tail + 1e-15


def test_gate_verdicts():
    geo = summability_gate(geometric_family(40, 2).coeffs, require_certified=True)
    assert geo.accepted and geo.certified and np.isfinite(geo.tail)
    half = summability_gate(power_family(40, 1, p=0.5).coeffs)
    assert half.verdict == "reject" and half.tail == np.inf
    bare = CoefficientFamily(np.full((4, 1), 0.1), np.full((4, 1), 0.1))
    assert summability_gate(bare, require_certified=True).verdict == "uncertified"
    assert summability_gate(bare).accepted
    big = CoefficientFamily(np.array([[2.0], [0.1]]), np.full((2, 1), 0.1))
    rep = summability_gate(big)
    assert rep.exceptional_u == ((0, 0),)
    with pytest.raises(ValueError):
        summability_gate(bare, threshold=0)


def test_clustered_instance_weighted_sum_blows_up():
    T = clustered_divergent_instance(200, xi0=0.1)
    gap = np.abs(T.lambdas.real - 0.1)
    assert gap.min() < 1e-4
    assert np.sum(np.abs(T.alpha[:, 0]) ** 2 / gap) > 1e2


def test_random_instance_properties():
    T, xi = random_instance(16, 2, 5)
    mu = np.linalg.eigvals(T.dense())
    assert np.max(np.abs(mu)) <= 0.9
    assert np.min(np.abs(mu.real - xi)) >= 0.05
    assert 0 < np.sum(mu.real > xi) < 16
    T2, xi2 = random_instance(16, 2, 5)
    assert xi == xi2 and np.array_equal(T.dense(), T2.dense())
