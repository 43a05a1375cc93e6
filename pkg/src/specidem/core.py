"""Borel series, the factors X(z), Y(z), the R x R core matrix and the formal resolvent.

With ``W = diag(1/(lambda - z))`` the core matrix is::

    I + Y(z) X(z) = I + beta^H W alpha,     entry (n, k) = delta_nk + f^{(k,n)}(z)

The square roots in ``X`` and ``Y`` cancel in the product, so the core is
assembled without them.  ``A(z)`` is its inverse and ``a_{i,j}(z) = A[i, j]``.
The formal resolvent is ``R(z) = W - B(z)`` with ``B(z) = W alpha A(z) beta^H W``.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .contour import COLLISION_FLOOR, diag_power, fixed_rule
from .errors import CollisionError, SingularCoreError

__all__ = [
    "COND_CAP",
    "CoreMatrix",
    "CoreInverse",
    "ResolventParts",
    "SymmetrizedOperator",
    "ContinuityScan",
    "borel_series",
    "borel_matrix",
    "apply_X",
    "apply_Y",
    "assemble_core",
    "invert_core",
    "core_batch",
    "resolvent_parts",
    "cofactor_identity_residual",
    "formal_resolvent_apply",
    "woodbury_residual",
    "symmetrized_operator",
    "continuity_scan",
    "core_diagnostics",
]

COND_CAP = 1e12


def _reciprocal(T, z, floor=COLLISION_FLOOR):
    return diag_power(T.lambdas, z, -1, floor)


def borel_series(T, i: int, j: int, z: complex, floor: float = COLLISION_FLOOR) -> complex:
    """``f^{(i,j)}(z) = sum_n alpha_n^(i) conj(beta_n^(j)) / (lambda_n - z)`` (0-based i, j)."""
    w = _reciprocal(T, z, floor)
    terms = T.alpha[:, i] * np.conj(T.beta[:, j]) * w
    return complex(np.sum(terms))


def borel_matrix(T, z: complex, floor: float = COLLISION_FLOOR) -> np.ndarray:
    """All Borel series at once: ``F[i, j] = f^{(i,j)}(z)``."""
    w = _reciprocal(T, z, floor)
    return (T.alpha * w[:, None]).T @ np.conj(T.beta)


def apply_X(T, z: complex, c) -> np.ndarray:
    """``X(z) c = sum_k c_k (D - z)^{-1/2} u_k``."""
    c = np.asarray(c, dtype=complex)
    return diag_power(T.lambdas, z, -0.5) * (T.alpha @ c)


def apply_Y(T, z: complex, x) -> np.ndarray:
    """``(Y(z) x)_k = sum_n x_n conj(beta_n^(k)) / sqrt(lambda_n - z)``."""
    x = np.asarray(x, dtype=complex)
    return np.conj(T.beta).T @ (diag_power(T.lambdas, z, -0.5) * x)


@dataclass(frozen=True)
class CoreMatrix:
    z: complex
    entries: np.ndarray
    cond: float

    @property
    def R(self) -> int:
        return self.entries.shape[0]


@dataclass(frozen=True)
class CoreInverse:
    z: complex
    A: np.ndarray
    norm: float
    cond: float


def _cond(M):
    """``(1 + ||F||) / sigma_min(I + F)``.

    This bounds the usual condition number of ``I + F`` from above and, unlike
    it, also sees cancellation between ``I`` and ``F`` when ``R = 1``.
    """
    if M.shape[-1] == 0:
        return np.ones(M.shape[:-2])
    R = M.shape[-1]
    s = np.linalg.svd(M, compute_uv=False)
    f = np.linalg.svd(M - np.eye(R), compute_uv=False)
    with np.errstate(divide="ignore"):
        return (1.0 + f[..., 0]) / s[..., -1]


def assemble_core(T, z: complex, floor: float = COLLISION_FLOOR) -> CoreMatrix:
    """``I + Y(z) X(z)`` with entry (n, k) equal to ``delta + f^{(k,n)}(z)``."""
    w = _reciprocal(T, z, floor)
    M = np.eye(T.R, dtype=complex) + np.conj(T.beta).T @ (w[:, None] * T.alpha)
    return CoreMatrix(complex(z), M, float(_cond(M)))


def invert_core(M: CoreMatrix, cap: float = COND_CAP) -> CoreInverse:
    """Dense LU inverse of the core matrix.

    Raises
    ------
    SingularCoreError
        If the condition number exceeds ``cap``; ``z`` is then numerically on an
        eigenvalue of ``T`` (or of ``T*``).
    """
    if not M.cond <= cap:
        raise SingularCoreError(f"core matrix at z={M.z} has condition {M.cond:.3e} > {cap:.1e}",
                                M.z, M.cond)
    R = M.R
    A = np.linalg.solve(M.entries, np.eye(R, dtype=complex)) if R else np.zeros((0, 0), complex)
    return CoreInverse(M.z, A, float(np.linalg.norm(A, 2)) if R else 0.0, M.cond)


def core_batch(T, zs, cap: float = COND_CAP, floor: float = COLLISION_FLOOR):
    """Vectorized core data at many points.

    Returns ``(W, A, cond)`` with ``W[g] = 1/(lambda - z_g)``, ``A[g]`` the inverse
    core at ``z_g`` and its condition number.
    """
    zs = np.atleast_1d(np.asarray(zs, dtype=complex))
    d = T.lambdas[None, :] - zs[:, None]
    if d.size:
        dist = np.min(np.abs(d), axis=1)
        bad = np.flatnonzero(dist < floor)
        if bad.size:
            g = bad[0]
            raise CollisionError(f"z={zs[g]} collides with the spectrum", zs[g], dist[g])
    W = 1.0 / d
    R = T.R
    M = np.eye(R, dtype=complex)[None] + np.einsum("nk,gn,nl->gkl", np.conj(T.beta), W, T.alpha)
    cond = _cond(M)
    bad = np.flatnonzero(~(cond <= cap))
    if bad.size:
        g = bad[np.argmax(cond[bad])]
        raise SingularCoreError(f"core matrix at z={zs[g]} has condition {cond[g]:.3e} > {cap:.1e}",
                                zs[g], cond[g])
    A = np.linalg.solve(M, np.broadcast_to(np.eye(R, dtype=complex), M.shape)) if R else M
    return W, A, cond


@dataclass(frozen=True)
class ResolventParts:
    """Ingredients of ``R(z) = (D - z)^{-1} - B(z)``."""

    z: complex
    diag_inverse: np.ndarray
    A: np.ndarray
    alpha: np.ndarray
    beta: np.ndarray

    def B_apply(self, x):
        x = np.asarray(x, dtype=complex)
        w = self.diag_inverse if x.ndim == 1 else self.diag_inverse[:, None]
        return w * (self.alpha @ (self.A @ (np.conj(self.beta).T @ (w * x))))

    def apply(self, x):
        x = np.asarray(x, dtype=complex)
        w = self.diag_inverse if x.ndim == 1 else self.diag_inverse[:, None]
        return w * x - self.B_apply(x)

    def B_dense(self) -> np.ndarray:
        P = self.diag_inverse[:, None] * self.alpha
        Qh = np.conj(self.beta).T * self.diag_inverse[None, :]
        return P @ self.A @ Qh

    def dense(self) -> np.ndarray:
        return np.diag(self.diag_inverse) - self.B_dense()


def resolvent_parts(T, z: complex, cap: float = COND_CAP) -> ResolventParts:
    inv = invert_core(assemble_core(T, z), cap)
    return ResolventParts(complex(z), _reciprocal(T, z), inv.A, T.alpha, T.beta)


def cofactor_identity_residual(T, z: complex, x, cap: float = COND_CAP) -> float:
    """Residual of ``sum_k sum_j x_j a_{k,j}(z) (delta_{k,n} + f^{(k,n)}(z)) = x_n``.

    ``x`` lives in the coefficient space of dimension ``R``.  Returns
    ``max_n |LHS_n - x_n| / (1 + ||x||)``.
    """
    x = np.asarray(x, dtype=complex)
    if x.shape != (T.R,):
        raise ValueError(f"x must have length R={T.R}")
    M = assemble_core(T, z)
    A = invert_core(M, cap).A
    if not T.R:
        return 0.0
    lhs = M.entries @ (A @ x)
    return float(np.max(np.abs(lhs - x)) / (1.0 + np.linalg.norm(x)))


def formal_resolvent_apply(T, z: complex, x, cap: float = COND_CAP) -> np.ndarray:
    """``R(z) x`` in ``O(N R + R^3)`` operations."""
    return resolvent_parts(T, z, cap).apply(x)


def woodbury_residual(T, z: complex, cap: float = COND_CAP) -> float:
    """Spectral norm of ``(I + XY)(I - X (I + YX)^{-1} Y) - I`` built densely."""
    N = T.N
    s = diag_power(T.lambdas, z, -0.5)
    X = s[:, None] * T.alpha
    Y = np.conj(T.beta).T * s[None, :]
    A = invert_core(assemble_core(T, z), cap).A
    I = np.eye(N, dtype=complex)
    E = (I + X @ Y) @ (I - X @ A @ Y) - I
    return float(np.linalg.norm(E, 2))


@dataclass(frozen=True)
class SymmetrizedOperator:
    xi: complex
    matrix: np.ndarray
    residual_left: float
    residual_right: float


def symmetrized_operator(T, xi: complex) -> SymmetrizedOperator:
    """``T~ = (D - xi) + sum_k ((D - xi)^{-1/2} u_k) (x) (((D - xi)^{1/2})^* v_k)``.

    The residuals are relative spectral norms of ``(T - xi) S - S T~`` and
    ``U (T - xi) - T~ U`` with ``S = (D - xi)^{1/2}`` and ``U = S^{-1} (T - xi)``.
    """
    s = diag_power(T.lambdas, xi, 0.5)
    N = T.N
    Tt = np.diag(T.lambdas - xi) + (T.alpha / s[:, None]) @ (np.conj(T.beta).T * s[None, :])
    Txi = T.dense() - xi * np.eye(N)
    S = np.diag(s)
    U = Txi / s[:, None]
    n2 = lambda M: np.linalg.norm(M, 2)
    r1 = n2(Txi @ S - S @ Tt) / max(n2(Txi) * n2(S), np.finfo(float).tiny)
    r2 = n2(U @ Txi - Tt @ U) / max(n2(U) * n2(Txi), np.finfo(float).tiny)
    return SymmetrizedOperator(complex(xi), Tt, float(r1), float(r2))


@dataclass
class ContinuityScan:
    """Norms of ``A(z)`` along a curve under successive refinement."""

    levels: list
    sups: list
    moduli: list
    C_xi: float
    argmax: complex
    cauchy: bool
    nodes: np.ndarray
    norms: np.ndarray

    def to_dict(self) -> dict:
        return {"levels": self.levels, "sup_norm_A": self.sups, "modulus": self.moduli,
                "C_xi": self.C_xi, "argmax": [self.argmax.real, self.argmax.imag],
                "cauchy": self.cauchy}


def continuity_scan(T, contour, depths: Sequence[int] = (2, 3, 4), order: int = 16,
                    rel_tol: float = 0.01, cap: float = COND_CAP) -> ContinuityScan:
    """Sample ``||A(z)||`` on Gauss nodes of the curve at increasing depth.

    ``C_xi`` is the squared supremum on the finest level.  The modulus column is
    the largest ``| ||A(z)|| - ||A(w)|| | / |z - w|`` between neighbouring nodes.
    ``cauchy`` is False when the last refinement moves the supremum by more than
    ``rel_tol``.
    """
    sups, moduli = [], []
    nodes = norms = None
    for d in depths:
        rule = fixed_rule(contour, d, order)
        try:
            _, A, _ = core_batch(T, rule.nodes, cap)
        except SingularCoreError as exc:
            raise SingularCoreError(f"continuity scan failed at depth {d}: {exc}", exc.z, exc.cond)
        norms = np.linalg.norm(A, 2, axis=(1, 2)) if T.R else np.ones(rule.size)
        nodes = rule.nodes
        sups.append(float(np.max(norms)))
        dz = np.abs(np.diff(nodes))
        ok = dz > 0
        moduli.append(float(np.max(np.abs(np.diff(norms))[ok] / dz[ok])) if np.any(ok) else 0.0)
    i = int(np.argmax(norms))
    cauchy = len(sups) < 2 or abs(sups[-1] - sups[-2]) <= rel_tol * sups[-1]
    return ContinuityScan(list(depths), sups, moduli, sups[-1] ** 2, complex(nodes[i]), cauchy,
                          nodes, norms)


def core_diagnostics(T, zs, x=None, cap: float = COND_CAP, woodbury: bool = True) -> list:
    """Per-point JSON-ready records: cond, ``||A||``, Woodbury and cofactor residuals."""
    rng = np.random.default_rng(0)
    out = []
    for z in np.atleast_1d(np.asarray(zs, dtype=complex)):
        M = assemble_core(T, z)
        inv = invert_core(M, cap)
        xv = x if x is not None else rng.standard_normal(T.R) + 1j * rng.standard_normal(T.R)
        rec = {"z": [z.real, z.imag], "cond": M.cond, "norm_A": inv.norm,
               "cofactor_residual": cofactor_identity_residual(T, z, xv, cap)}
        if woodbury:
            rec["woodbury_residual"] = woodbury_residual(T, z, cap)
        out.append(rec)
    return out
