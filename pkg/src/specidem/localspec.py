"""Membership certificates for half-disc spectral subspaces.

Given ``y``, the functions

    g_k(z) = (1/2 pi i) oint h_k(w) / (z - w) dw,   h(w) = A(w) beta^H diag(1/(lambda - w)) y,

are analytic off the curve.  For ``x`` in the range of ``J_xi^+`` and ``y = x``
they satisfy the four characterizing conditions and produce the local resolvent
function ``f_x`` with ``(T - z) f_x(z) = x``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .contour import build_contour, integrate
from .core import COND_CAP, core_batch
from .errors import CollisionError, GateError
from .idempotent import DELTA_CAP, DELTA_FLOOR, delta_membership, half_plane_idempotent, numerical_rank
from .model import adjoint

__all__ = [
    "divided_difference",
    "GFunctions",
    "Certificate",
    "TwoPointReport",
    "default_grid",
    "certificate_g_functions",
    "check_membership",
    "certify",
    "local_two_point_test",
]

PASS_TOL = 1e-6
GRID_CLEARANCE = 0.05


def divided_difference(g, z, w, scale: float = 1.0, coincide: float = 1e-12):
    """``(g(z) - g(w)) / (z - w)``, or a central difference derivative when ``z == w``."""
    z, w = complex(z), complex(w)
    if abs(z - w) > coincide * max(1.0, abs(z)):
        return (np.asarray(g(z)) - np.asarray(g(w))) / (z - w)
    h = 1e-6 * scale
    return (np.asarray(g(z + h)) - np.asarray(g(z - h))) / (2 * h)


def default_grid(contour, n_circle: int = 32, radii=(1.5, 3.0), n_inner: int = 32,
                 clearance: float = GRID_CLEARANCE, seed: int = 0) -> np.ndarray:
    """Two outer circles plus interior points of ``F^c`` inside the closed disc."""
    th = 2 * np.pi * (np.arange(n_circle) + 0.5) / n_circle
    pts = [r * np.exp(1j * th) for r in radii]
    rng = np.random.default_rng(seed)
    inner = []
    while len(inner) < n_inner:
        c = rng.uniform(-1, 1, 64) + 1j * rng.uniform(-1, 1, 64)
        ok = (np.abs(c) <= 1) & ~contour.region(c) & (contour.distance(c) >= clearance)
        inner.extend(c[ok].tolist())
    pts.append(np.array(inner[:n_inner]))
    return np.concatenate(pts)


@dataclass
class GFunctions:
    """Quadrature representation of ``g_1..g_R``; callable at any point off the curve."""

    xi: float
    side: str
    nodes: np.ndarray
    weights: np.ndarray
    h: np.ndarray  # (nodes, R)
    error: float

    def __call__(self, z):
        z = np.asarray(z, dtype=complex)
        flat = z.reshape(-1)
        K = self.weights[:, None] / (flat[None, :] - self.nodes[:, None])
        out = (K.T @ self.h) / (2j * np.pi)
        return out.reshape(z.shape + (self.h.shape[1],))


def certificate_g_functions(T, y, xi: float, side: str = "plus", z_grid=None,
                            tol: float = 1e-12, cap: float = COND_CAP,
                            floor: float = 1e-3) -> GFunctions:
    """Build ``g_k`` from ``y``.

    The adaptive rule resolves ``h_k(w) / (z - w)`` for every ``z`` in ``z_grid``
    and every ``lambda_n`` outside ``F``; points closer than ``floor`` to the
    curve are refused.
    """
    contour = build_contour(T, xi, side)
    y = np.asarray(y, dtype=complex)
    if z_grid is None:
        z_grid = default_grid(contour)
    z_grid = np.asarray(z_grid, dtype=complex)
    outside = T.lambdas[~contour.region(T.lambdas)]
    targets = np.concatenate([z_grid, outside])
    if targets.size and np.min(contour.distance(targets)) < floor:
        d = float(np.min(contour.distance(targets)))
        raise CollisionError(f"evaluation point within {d:.2e} of the curve", None, d)
    beta_h = np.conj(T.beta).T

    def hfun(w):
        W, A, _ = core_batch(T, w, cap)
        return np.einsum("gkl,ln,gn,n->gk", A, beta_h, W, y)

    def f(w):
        return hfun(w)[:, :, None] / (targets[None, None, :] - w[:, None, None])

    res = integrate(f, contour, tol=tol)
    nodes, weights = res.rule.nodes, res.rule.weights
    h = hfun(nodes) if T.R else np.zeros((nodes.size, 0), complex)
    return GFunctions(float(xi), side, nodes, weights, h, res.error / (2 * math.pi))


@dataclass
class Certificate:
    xi: float
    side: str
    residual_i: float
    residual_ii: float
    residual_iii: float
    residual_iv: float
    series_iv: float
    resolvent_residual: float
    tol: float
    cap: float
    grid_size: int
    g_samples: Optional[np.ndarray] = field(default=None, repr=False)
    grid: Optional[np.ndarray] = field(default=None, repr=False)

    @property
    def score(self) -> float:
        return max(self.residual_i, self.residual_ii, self.residual_iii, self.residual_iv,
                   self.resolvent_residual)

    @property
    def passed(self) -> bool:
        return self.score <= self.tol

    def to_dict(self) -> dict:
        return {"xi": self.xi, "side": self.side,
                "residuals": {"i": self.residual_i, "ii": self.residual_ii, "iii": self.residual_iii,
                              "iv": self.residual_iv, "resolvent": self.resolvent_residual},
                "series_iv": self.series_iv, "score": self.score,
                "thresholds": {"pass": self.tol, "series_cap": self.cap},
                "grid": {"size": self.grid_size, "circles": [1.5, 3.0],
                         "inner_clearance": GRID_CLEARANCE},
                "passed": self.passed}


def _gamma(gz, gl, z, lam):
    """``Gamma(g_k)(z, lambda_n)`` for all n, k given ``g(z)`` (R,) and ``g(lambda)`` (n, R)."""
    return (gz[None, :] - gl) / (z - lam)[:, None]


def check_membership(T, x, xi: float, side: str, g: GFunctions, grid=None,
                     tol: float = PASS_TOL, cap: float = DELTA_CAP) -> Certificate:
    """Evaluate conditions (i)-(iv) and the local resolvent residual for ``x``.

    All residuals are relative to ``||x||``.  Condition (ii) is a central
    Cauchy-Riemann defect with step ``1e-6 * max(1, |z|)``; condition (iv) reports
    ``max(0, S / cap - 1)`` where ``S`` is the largest sampled series value.
    """
    contour = build_contour(T, xi, side)
    x = np.asarray(x, dtype=complex)
    nx = max(float(np.linalg.norm(x)), np.finfo(float).tiny)
    grid = default_grid(contour) if grid is None else np.asarray(grid, dtype=complex)
    if grid.size and np.min(contour.distance(grid)) < 1e-3:
        raise CollisionError("certificate grid touches the curve")
    inF = contour.region(T.lambdas)
    lamF, lamC = T.lambdas[inF], T.lambdas[~inF]
    aF, aC = T.alpha[inF], T.alpha[~inF]
    bF, bC = T.beta[inF], T.beta[~inF]
    xF, xC = x[inF], x[~inF]
    gl = g(lamC)  # (nC, R)

    res_i = float(np.max(np.abs(xC - np.sum(gl * aC, axis=1)), initial=0.0)) / nx

    def phi(z):
        return np.sum(_gamma(g(z), gl, z, lamC) * aC, axis=1)

    res_ii = res_iii = series = res_f = 0.0
    samples = g(grid)
    for z, gz in zip(grid, samples):
        s = 1e-6 * max(1.0, abs(z))
        cr = (phi(z + s) - phi(z - s)) / (2 * s) + 1j * (phi(z + 1j * s) - phi(z - 1j * s)) / (2 * s)
        scale = max(1.0, float(np.linalg.norm(phi(z))))
        res_ii = max(res_ii, float(np.linalg.norm(cr)) / (scale * nx))

        wF = 1.0 / (lamF - z)
        lhs = (xF * wF) @ np.conj(bF)
        gam = _gamma(gz, gl, z, lamC)
        proj = np.sum(gam * aC, axis=1)  # components of f_x outside F
        rhs = gz + (wF[:, None] * (aF @ gz)[:, None] * np.conj(bF)).sum(axis=0) - proj @ np.conj(bC)
        # the middle term sums over every m, m = k included
        res_iii = max(res_iii, float(np.max(np.abs(lhs - rhs), initial=0.0)) / nx)

        series = max(series, float(np.sum(np.abs(T.alpha @ gz) ** 2)))

        fx = np.empty(T.N, dtype=complex)
        fx[inF] = (xF - aF @ gz) * wF
        fx[~inF] = proj
        r = T.apply(fx) - z * fx - x
        res_f = max(res_f, float(np.linalg.norm(r)) / nx)
    res_iv = max(0.0, series / cap - 1.0)
    return Certificate(float(xi), side, res_i, res_ii, res_iii, res_iv, series, res_f, tol, cap,
                       int(grid.size), samples, grid)


def certify(T, x, xi: float, side: str = "plus", tol: float = PASS_TOL, grid=None,
            quad_tol: float = 1e-12) -> Certificate:
    """Build ``g`` from ``y = x`` and check membership of ``x`` in the spectral subspace of ``F``."""
    contour = build_contour(T, xi, side)
    grid = default_grid(contour) if grid is None else np.asarray(grid, dtype=complex)
    s = 1e-6 * np.maximum(1.0, np.abs(grid))
    shifted = np.concatenate([grid, grid + s, grid - s, grid + 1j * s, grid - 1j * s])
    g = certificate_g_functions(T, x, xi, side, shifted, tol=quad_tol)
    return check_membership(T, x, xi, side, g, grid, tol)


@dataclass
class TwoPointReport:
    x1: float
    x2: float
    delta_x1: dict
    delta_x2: dict
    rank_plus: int
    rank_adjoint_minus: int
    N: int

    @property
    def non_dense(self) -> bool:
        return self.rank_plus < self.N and self.rank_adjoint_minus > 0

    def to_dict(self) -> dict:
        d = dict(self.__dict__)
        d["non_dense"] = self.non_dense
        return d


def local_two_point_test(T, x1: float, x2: float, floor: float = DELTA_FLOOR, cap: float = DELTA_CAP,
                         tol: float = 1e-11) -> TwoPointReport:
    """Two-abscissa local test.

    Both abscissae must pass the weighted-sum test for the alpha and beta arrays.
    Then ``J_{x2}^+`` is built for ``T`` and ``J_{x1}^-`` for the adjoint, and the
    ranks serve as the non-density proxy.

    Raises
    ------
    GateError
        When either abscissa fails.
    """
    if not x1 < x2:
        raise ValueError("need x1 < x2")
    eigs = np.linalg.eigvals(T.dense()) if T.N else np.zeros(0)
    reps = [delta_membership(T, x, floor, cap, eigs) for x in (x1, x2)]
    for r in reps:
        if not r.accepted:
            raise GateError(f"local condition fails at xi={r.xi}", r)
    Jp = half_plane_idempotent(T, x2, "plus", tol, eigenvalues=eigs, constants=False)
    Ta = adjoint(T)
    Jm = half_plane_idempotent(Ta, x1, "minus", tol, eigenvalues=np.conj(eigs), constants=False)
    return TwoPointReport(float(x1), float(x2), reps[0].to_dict(), reps[1].to_dict(),
                          numerical_rank(Jp.J), numerical_rank(Jm.J), T.N)
