"""Half-plane spectral idempotents ``J_xi^+-`` and their verification.

``J = I_F + (1/2 pi i) oint B(z) dz`` where ``I_F`` is the exact coordinate
projector onto the indices with ``lambda_n`` inside the half disc and ``B(z)`` is
the low-rank part of the formal resolvent.  By the Woodbury identity this is the
Riesz projector ``-(1/2 pi i) oint (T - z)^{-1} dz``, but no ``N x N`` solve is
ever performed: each quadrature node costs one ``R x R`` inversion.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .contour import build_contour, contour_weight_constant, integrate
from .core import COND_CAP, core_batch
from .errors import GateError, SpecidemError
from .model import index_set, rotate

__all__ = [
    "DeltaReport",
    "DeltaScan",
    "SpectralIdempotent",
    "PairVerification",
    "RectangleIdempotent",
    "delta_membership",
    "sample_delta",
    "half_plane_idempotent",
    "verify_pair",
    "rectangle_idempotent",
    "numerical_rank",
]

DELTA_FLOOR = 1e-6
DELTA_CAP = 1e6


@dataclass
class DeltaReport:
    xi: float
    margin: float
    weighted_alpha: float
    weighted_beta: float
    eig_clearance: float
    verdict: str
    floor: float = DELTA_FLOOR
    cap: float = DELTA_CAP
    tail_alpha: Optional[float] = None
    tail_beta: Optional[float] = None

    @property
    def accepted(self) -> bool:
        return self.verdict == "accept"

    def to_dict(self) -> dict:
        return {k: getattr(self, k) for k in ("xi", "margin", "weighted_alpha", "weighted_beta",
                                              "eig_clearance", "verdict", "floor", "cap",
                                              "tail_alpha", "tail_beta")}


def _weighted(c, gap):
    mag = np.sum(np.abs(c) ** 2, axis=-1)
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(mag == 0, 0.0, mag / gap)
    return np.sum(terms, axis=-1)


def _eig_real_parts(T, eigenvalues=None):
    if eigenvalues is None:
        eigenvalues = np.linalg.eigvals(T.dense()) if T.N else np.zeros(0)
    # T* has the conjugate spectrum, so the real parts coincide
    return np.asarray(eigenvalues).real


def delta_membership(T, xi: float, floor: float = DELTA_FLOOR, cap: float = DELTA_CAP,
                     eigenvalues=None) -> DeltaReport:
    """Margins and weighted sums deciding whether ``xi`` is usable.

    ``eigenvalues`` may carry precomputed dense eigenvalues of ``T``.
    """
    xi = float(xi)
    gap = np.abs(T.lambdas.real - xi)
    margin = float(np.min(gap, initial=math.inf))
    wa = float(_weighted(T.alpha, gap))
    wb = float(_weighted(T.beta, gap))
    ta = tb = None
    tail = getattr(T.coeffs, "tail_bound", None)
    if tail is not None:
        ta, tb = tail.weighted(xi)
        wa += ta
        wb += tb
    re = _eig_real_parts(T, eigenvalues)
    clearance = float(np.min(np.abs(re - xi), initial=math.inf))
    ok = margin >= floor and clearance >= floor and wa <= cap and wb <= cap
    return DeltaReport(xi, margin, wa, wb, clearance, "accept" if ok else "reject",
                       floor, cap, ta, tb)


@dataclass
class DeltaScan:
    xis: np.ndarray
    reports: list

    @property
    def accepted(self) -> np.ndarray:
        return np.array([r.xi for r in self.reports if r.accepted])

    @property
    def fraction(self) -> float:
        return sum(r.accepted for r in self.reports) / len(self.reports) if self.reports else float("nan")

    def rejections(self) -> dict:
        return {r.xi: r for r in self.reports if not r.accepted}


def sample_delta(T, grid=None, resolution: int = 1000, floor: float = DELTA_FLOOR,
                 cap: float = DELTA_CAP, eigenvalues=None) -> DeltaScan:
    """Run :func:`delta_membership` over a grid of abscissae (default: interior of ``(a, b)``)."""
    if grid is None:
        a, b = T.spectrum.a, T.spectrum.b
        grid = np.linspace(a, b, resolution + 2)[1:-1]
    grid = np.asarray(grid, dtype=float)
    if eigenvalues is None and grid.size:
        eigenvalues = np.linalg.eigvals(T.dense())
    return DeltaScan(grid, [delta_membership(T, x, floor, cap, eigenvalues) for x in grid])


def numerical_rank(J, rtol: float = 1e-8) -> int:
    s = np.linalg.svd(J, compute_uv=False)
    if s.size == 0 or s[0] == 0:
        return 0
    return int(np.sum(s > rtol * s[0]))


@dataclass
class SpectralIdempotent:
    xi: float
    side: str
    J: np.ndarray
    diagnostics: dict = field(default_factory=dict)
    index: np.ndarray = None
    rule: object = None

    def residuals(self, T) -> dict:
        J = self.J
        Td = T.dense()
        nJ = np.linalg.norm(J, 2)
        nT = np.linalg.norm(Td, 2)
        return {
            "idempotency": float(np.linalg.norm(J @ J - J, 2)),
            "idempotency_bound": 1e-8 * (1 + nJ**2),
            "commutation": float(np.linalg.norm(J @ Td - Td @ J, 2)),
            "commutation_bound": 1e-8 * nT * max(nJ, 1.0),
            "invariance": float(np.linalg.norm((np.eye(T.N) - J) @ Td @ J, 2)),
            "norm_J": float(nJ),
        }


def _probe_integrand(T, Z, cap):
    alpha, beta_h = T.alpha, np.conj(T.beta).T

    def f(z):
        W, A, _ = core_batch(T, z, cap)
        y = np.einsum("kn,gn,np->gkp", beta_h, W, Z)
        c = A @ y
        return W[:, :, None] * np.einsum("nk,gkp->gnp", alpha, c)

    return f


def _assemble(T, nodes, weights, cap, chunk=256):
    """``sum_i w_i B(z_i)`` as one ``(N x R m) @ (R m x N)`` product per chunk."""
    N, R = T.N, T.R
    out = np.zeros((N, N), dtype=complex)
    if R == 0:
        return out, 1.0, 1.0
    beta_h = np.conj(T.beta).T
    C = 0.0
    cmax = 1.0
    for s in range(0, nodes.size, chunk):
        z, w = nodes[s:s + chunk], weights[s:s + chunk]
        W, A, cond = core_batch(T, z, cap)
        C = max(C, float(np.max(np.linalg.norm(A, 2, axis=(1, 2)))) ** 2)
        cmax = max(cmax, float(np.max(cond)))
        U = (w[:, None, None] * W[:, :, None]) * np.einsum("nk,gkl->gnl", T.alpha, A)  # g, N, R
        V = beta_h[None, :, :] * W[:, None, :]  # g, R, N
        out += U.transpose(1, 0, 2).reshape(N, -1) @ V.reshape(-1, N)
    return out, C, cmax


def half_plane_idempotent(T, xi: float, side: str = "plus", tol: float = 1e-11, order: int = 16,
                          check: bool = True, probes: int = 3, seed: int = 0,
                          eigenvalues=None, cap: float = COND_CAP, constants: bool = True,
                          floor: float = DELTA_FLOOR) -> SpectralIdempotent:
    """Construct ``J_xi^side`` by structured contour quadrature.

    The adaptive rule is driven by ``B(z)`` applied to a few fixed random probe
    vectors; the full matrix is assembled once on the accepted nodes.

    Parameters
    ----------
    check : bool
        Run :func:`delta_membership` first (needs dense eigenvalues) and compute
        the verification residuals afterwards.  Disable for timing runs.
    constants : bool
        Also compute the empirical contour constant and the norm bound ``M``.

    Raises
    ------
    GateError
        ``xi`` rejected by the membership test.
    SingularCoreError, QuadratureError
        Propagated from the core inversion and the integrator.
    """
    t0 = time.perf_counter()
    delta = None
    if check:
        delta = delta_membership(T, xi, floor=floor, eigenvalues=eigenvalues)
        if not delta.accepted:
            raise GateError(f"xi={xi} rejected (margin {delta.margin:.2e}, "
                            f"eig clearance {delta.eig_clearance:.2e})", delta)
    contour = build_contour(T, xi, side, margin=floor)
    idx = index_set(T, contour.region)
    N = T.N
    J = np.zeros((N, N), dtype=complex)
    J[idx, idx] = 1.0
    diag = {"xi": float(xi), "side": side, "N": N, "R": T.R, "tol": tol}
    if T.R:
        rng = np.random.default_rng(seed)
        Z = rng.standard_normal((N, probes)) + 1j * rng.standard_normal((N, probes))
        Z /= np.linalg.norm(Z, axis=0)
        res = integrate(_probe_integrand(T, Z, cap), contour, tol=tol, order=order)
        Jint, C_xi, cmax = _assemble(T, res.rule.nodes, res.rule.weights, cap)
        J += Jint / (2j * np.pi)
        diag.update(quad_error=res.error / (2 * math.pi), nodes=int(res.rule.size),
                    panels=res.panels, C_xi=C_xi, max_core_cond=cmax)
        rule = res.rule
    else:
        diag.update(quad_error=0.0, nodes=0, panels=0, C_xi=1.0, max_core_cond=1.0)
        rule = None
    if constants:
        gap = np.abs(T.lambdas.real - xi)
        wa = float(_weighted(T.alpha, gap))
        wb = float(_weighted(T.beta, gap))
        C_hat = contour_weight_constant(contour, T.lambdas).value if N else 0.0
        M_hat = C_hat**2 * diag["C_xi"] * wa * wb
        JI = J.copy()
        JI[idx, idx] -= 1.0
        diag.update(C_hat=C_hat, M_hat=M_hat, norm_bound=math.sqrt(M_hat) / (2 * math.pi),
                    norm_integral_part=float(np.linalg.norm(JI, 2)))
    diag["wall_time"] = time.perf_counter() - t0
    out = SpectralIdempotent(float(xi), side, J, diag, idx, rule)
    if check:
        diag.update(out.residuals(T))
        diag["delta"] = delta.to_dict()
    return out


@dataclass
class PairVerification:
    partition: float
    product_pm: float
    product_mp: float
    idempotency: float
    rank_plus: int
    rank_minus: int
    nontrivial_plus: bool
    nontrivial_minus: bool

    @property
    def max_residual(self) -> float:
        return max(self.partition, self.product_pm, self.product_mp, self.idempotency)

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def verify_pair(J_plus, J_minus, T=None, rank_tol: float = 1e-8) -> PairVerification:
    """Partition, orthogonality and idempotency residuals of a ``(J^+, J^-)`` pair."""
    if isinstance(J_plus, SpectralIdempotent) and isinstance(J_minus, SpectralIdempotent):
        if J_plus.xi != J_minus.xi:
            raise ValueError(f"mismatched abscissae {J_plus.xi} and {J_minus.xi}")
        Jp, Jm = J_plus.J, J_minus.J
    else:
        Jp, Jm = np.asarray(J_plus), np.asarray(J_minus)
    N = Jp.shape[0]
    n2 = lambda M: float(np.linalg.norm(M, 2)) if M.size else 0.0
    rp, rm = numerical_rank(Jp, rank_tol), numerical_rank(Jm, rank_tol)
    return PairVerification(
        partition=n2(Jp + Jm - np.eye(N)),
        product_pm=n2(Jp @ Jm),
        product_mp=n2(Jm @ Jp),
        idempotency=max(n2(Jp @ Jp - Jp), n2(Jm @ Jm - Jm)),
        rank_plus=rp, rank_minus=rm,
        nontrivial_plus=0 < rp < N, nontrivial_minus=0 < rm < N)


@dataclass
class RectangleIdempotent:
    J: np.ndarray
    factors: list
    commutator: float
    idempotency: float
    commutation: float

    def to_dict(self) -> dict:
        return {"commutator": self.commutator, "idempotency": self.idempotency,
                "commutation": self.commutation,
                "factors": [f.diagnostics for f in self.factors]}


def rectangle_idempotent(T, x1: float, x2: float, y1: float, y2: float, tol: float = 1e-11,
                         check: bool = True, commute_tol: float = 1e-8, **kw) -> RectangleIdempotent:
    """Product of four half-plane idempotents isolating ``(x1, x2) x (y1, y2)``.

    The vertical cuts come from the quarter-turned operator ``-iT``, whose real
    parts are the imaginary parts of the spectrum of ``T``; its idempotents are
    matrices acting on the same space and need no pulling back.
    """
    if not (x1 < x2 and y1 < y2):
        raise ValueError("need x1 < x2 and y1 < y2")
    Tr = rotate(T, -1j)
    factors = [
        half_plane_idempotent(T, x1, "plus", tol, check=check, **kw),
        half_plane_idempotent(T, x2, "minus", tol, check=check, **kw),
        half_plane_idempotent(Tr, y1, "plus", tol, check=check, **kw),
        half_plane_idempotent(Tr, y2, "minus", tol, check=check, **kw),
    ]
    Js = [f.J for f in factors]
    comm = 0.0
    for i in range(4):
        for j in range(i + 1, 4):
            comm = max(comm, float(np.linalg.norm(Js[i] @ Js[j] - Js[j] @ Js[i], 2)))
    J = Js[0] @ Js[1] @ Js[2] @ Js[3]
    Td = T.dense()
    idem = float(np.linalg.norm(J @ J - J, 2))
    com_T = float(np.linalg.norm(J @ Td - Td @ J, 2))
    if check and comm > commute_tol:
        raise SpecidemError(f"rectangle factors fail to commute (residual {comm:.2e})")
    return RectangleIdempotent(J, factors, comm, idem, com_T)
