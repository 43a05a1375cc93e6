"""Dense ground truth: eigensystems, Riesz projectors and the commutant.

Nothing here uses the diagonal-plus-low-rank structure of ``T``; every route
works on the dense matrix.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np
import scipy.linalg
from scipy.optimize import linear_sum_assignment

from .contour import Piece, integrate
from .errors import CollisionError, NearDefectiveError, SpecidemError

__all__ = [
    "EIG_CAP",
    "GAP_FLOOR",
    "EigenSystem",
    "HalfPlane",
    "Rectangle",
    "Whole",
    "Empty",
    "OracleDisagreement",
    "dense_eig",
    "dense_contour_projector",
    "riesz_oracle",
    "commutant_basis",
    "commutant_residual",
    "match_spectra",
]

EIG_CAP = 4096
GAP_FLOOR = 1e-10


class OracleDisagreement(SpecidemError):
    """The eigenprojector sum and the dense contour integral disagree."""


@dataclass(frozen=True)
class _Curve:
    """Closed curve of smooth pieces around an oracle region."""

    pieces: tuple

    @property
    def length(self) -> float:
        return sum(p.length for p in self.pieces)


def _polygon(vertices: Sequence[complex]) -> _Curve:
    """Counterclockwise polygon through ``vertices``; one piece per edge."""
    v = [complex(z) for z in vertices]
    return _Curve(tuple(Piece("segment", v[i], v[(i + 1) % len(v)]) for i in range(len(v))))


def _circle(center: complex = 0j, radius: float = 1.0, pieces: int = 4) -> _Curve:
    step = 2 * math.pi / pieces
    return _Curve(tuple(Piece("arc", complex(i * step), complex((i + 1) * step), center, radius)
                             for i in range(pieces)))


def _dense(T):
    return T.dense() if hasattr(T, "dense") else np.asarray(T, dtype=complex)


@dataclass
class EigenSystem:
    """Eigenvalues with right and left eigenvectors, ``l_i^H r_i`` stored separately."""

    values: np.ndarray
    right: np.ndarray
    left: np.ndarray
    norming: np.ndarray
    min_gap: float
    residual: float

    @property
    def simple(self) -> bool:
        return self.min_gap >= GAP_FLOOR

    def projector(self, i) -> np.ndarray:
        return np.outer(self.right[:, i], np.conj(self.left[:, i])) / self.norming[i]

    def spectral_sum(self, mask) -> np.ndarray:
        idx = np.flatnonzero(mask)
        R = self.right[:, idx] / self.norming[idx]
        return R @ np.conj(self.left[:, idx]).T

    def biorthogonality(self) -> float:
        G = np.conj(self.left).T @ self.right
        G = G / self.norming[None, :]
        return float(np.max(np.abs(G - np.eye(G.shape[0])), initial=0.0))


def _min_gap(mu):
    if mu.size < 2:
        return math.inf
    d = np.abs(mu[:, None] - mu[None, :])
    np.fill_diagonal(d, np.inf)
    return float(np.min(d))


def dense_eig(T, cap: int = EIG_CAP) -> EigenSystem:
    """Nonsymmetric dense eigendecomposition (LAPACK ``geev`` via SciPy)."""
    M = _dense(T)
    N = M.shape[0]
    if N > cap:
        raise ValueError(f"N={N} exceeds the dense eigensolver cap {cap}")
    mu, L, Rv = scipy.linalg.eig(M, left=True, right=True)
    norming = np.einsum("ni,ni->i", np.conj(L), Rv)
    scale = max(np.linalg.norm(M, 2), np.finfo(float).tiny) if N else 1.0
    res = float(np.max(np.linalg.norm(M @ Rv - Rv * mu[None, :], axis=0), initial=0.0) / scale)
    return EigenSystem(mu, Rv, L, norming, _min_gap(mu), res)


@dataclass(frozen=True)
class HalfPlane:
    """``Re z > xi`` (side ``plus``) or ``Re z < xi`` (side ``minus``)."""

    xi: float
    side: str = "plus"

    def __call__(self, z):
        z = np.asarray(z, dtype=complex)
        return z.real > self.xi if self.side == "plus" else z.real < self.xi

    def boundary_distance(self, z):
        return np.abs(np.asarray(z, dtype=complex).real - self.xi)

    def curve(self, rho: float) -> _Curve:
        if self.side == "plus":
            return _polygon([self.xi - 1j * rho, rho - 1j * rho, rho + 1j * rho, self.xi + 1j * rho])
        return _polygon([self.xi + 1j * rho, -rho + 1j * rho, -rho - 1j * rho, self.xi - 1j * rho])


@dataclass(frozen=True)
class Rectangle:
    x1: float
    x2: float
    y1: float
    y2: float

    def __call__(self, z):
        z = np.asarray(z, dtype=complex)
        return (z.real > self.x1) & (z.real < self.x2) & (z.imag > self.y1) & (z.imag < self.y2)

    def boundary_distance(self, z):
        z = np.asarray(z, dtype=complex)
        dx = np.maximum(self.x1 - z.real, z.real - self.x2)
        dy = np.maximum(self.y1 - z.imag, z.imag - self.y2)
        outside = np.hypot(np.maximum(dx, 0), np.maximum(dy, 0))
        inside = np.minimum(-dx, -dy)
        return np.where((dx < 0) & (dy < 0), inside, outside)

    def curve(self, rho: float = 0.0) -> _Curve:
        return _polygon([complex(self.x1, self.y1), complex(self.x2, self.y1),
                                complex(self.x2, self.y2), complex(self.x1, self.y2)])


@dataclass(frozen=True)
class Whole:
    def __call__(self, z):
        return np.ones(np.shape(z), dtype=bool)

    def boundary_distance(self, z):
        return np.full(np.shape(z), np.inf)

    def curve(self, rho: float) -> _Curve:
        return _circle(0j, rho)


@dataclass(frozen=True)
class Empty:
    def __call__(self, z):
        return np.zeros(np.shape(z), dtype=bool)

    def boundary_distance(self, z):
        return np.full(np.shape(z), np.inf)

    def curve(self, rho: float):
        return None


def dense_contour_projector(T, curve, tol: float = 1e-11) -> np.ndarray:
    """``-(1/2 pi i) oint (T - z)^{-1} dz`` with one dense LU solve per node."""
    M = _dense(T)
    N = M.shape[0]
    I = np.eye(N, dtype=complex)

    def f(z):
        return np.linalg.solve(M[None] - z[:, None, None] * I[None], np.broadcast_to(I, (z.size, N, N)))

    return -integrate(f, curve, tol=tol).value / (2j * np.pi)


def riesz_oracle(T, region: Callable, eig: Optional[EigenSystem] = None, floor: float = 1e-8,
                 cross_check: bool = True, check_tol: float = 1e-8, quad_tol: float = 1e-11) -> np.ndarray:
    """Eigenprojector sum over the eigenvalues inside ``region``.

    When the region knows its boundary the sum is compared with the dense
    contour integral and :class:`OracleDisagreement` is raised beyond ``check_tol``.
    """
    eig = eig or dense_eig(T)
    if not eig.simple:
        raise NearDefectiveError(f"minimum eigenvalue gap {eig.min_gap:.2e} below {GAP_FLOOR:.0e}")
    mu = eig.values
    if hasattr(region, "boundary_distance") and mu.size:
        d = float(np.min(region.boundary_distance(mu)))
        if d < floor:
            raise CollisionError(f"an eigenvalue lies within {d:.2e} of the region boundary", None, d)
    P = eig.spectral_sum(np.asarray(region(mu), dtype=bool))
    if cross_check and hasattr(region, "curve") and mu.size:
        rho = 1.25 * float(np.max(np.abs(mu))) + 0.25
        curve = region.curve(rho)
        if curve is not None:
            Pc = dense_contour_projector(T, curve, quad_tol)
            gap = float(np.linalg.norm(P - Pc, 2))
            if gap > check_tol:
                raise OracleDisagreement(f"eigenprojector and contour routes differ by {gap:.3e}")
    return P


def commutant_basis(T, method: str = "auto", eig: Optional[EigenSystem] = None,
                    sylvester_max: int = 24, rtol: float = 1e-10) -> np.ndarray:
    """Basis of ``{C : CT = TC}`` as an array of shape ``(dim, N, N)``.

    ``sylvester`` takes the SVD null space of ``C -> CT - TC`` (cost ``N^6``);
    ``eigen`` uses the eigenprojectors, which span the commutant when the
    spectrum is simple.  ``auto`` picks the first for ``N <= sylvester_max``.
    """
    M = _dense(T)
    N = M.shape[0]
    if N > 1 and np.allclose(M, M[0, 0] * np.eye(N), rtol=0, atol=1e-14 * max(1.0, abs(M[0, 0]))):
        raise ValueError("T is a scalar multiple of the identity; its commutant is everything")
    if method == "auto":
        method = "sylvester" if N <= sylvester_max else "eigen"
    if method == "sylvester":
        I = np.eye(N)
        # row-major vec: vec(C T) = (I kron T^T) vec C, vec(T C) = (T kron I) vec C
        S = np.kron(I, M.T) - np.kron(M, I)
        _, s, Vh = np.linalg.svd(S)
        null = s <= rtol * max(s[0], 1.0)
        basis = np.conj(Vh[null]).reshape(-1, N, N)
        if eig is None:
            eig = dense_eig(M)
        if eig.simple and basis.shape[0] != N:
            raise NearDefectiveError(f"commutant dimension {basis.shape[0]} != N={N}")
        return basis
    if method == "eigen":
        eig = eig or dense_eig(M)
        if not eig.simple:
            raise NearDefectiveError("eigenprojector basis needs a simple spectrum")
        basis = np.stack([eig.projector(i) for i in range(N)])
        return basis / np.linalg.norm(basis, axis=(1, 2))[:, None, None]
    raise ValueError(f"unknown method {method!r}")


def commutant_residual(J, basis) -> float:
    """``max_C ||JC - CJ|| / (||J|| ||C||)`` over a commutant basis."""
    nJ = max(np.linalg.norm(J, 2), np.finfo(float).tiny)
    worst = 0.0
    for C in basis:
        nC = np.linalg.norm(C, 2)
        worst = max(worst, float(np.linalg.norm(J @ C - C @ J, 2) / (nJ * nC)))
    return worst


def match_spectra(a, b) -> float:
    """Largest distance under the optimal one-to-one matching of two point sets."""
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    if a.size != b.size:
        return math.inf
    if a.size == 0:
        return 0.0
    cost = np.abs(a[:, None] - b[None, :])
    r, c = linear_sum_assignment(cost)
    return float(np.max(cost[r, c]))
