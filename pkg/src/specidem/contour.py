"""Half-disc contours, the fixed square-root branch, and composite Gauss-Legendre quadrature.

For an abscissa ``xi`` in ``(-1, 1)`` the closed curve ``gamma^+`` is the chord
``Re z = xi`` of the unit disc joined with the arc ``Re z >= xi`` of the unit
circle; ``gamma^-`` uses the other arc.  Both are positively oriented, so that
``F^+ = {Re z >= xi, |z| <= 1}`` and ``F^- = {Re z <= xi, |z| <= 1}`` are the
enclosed closed regions.

Each curve is stored as two smooth pieces (arc, chord) meeting at the corners
``xi +- i sqrt(1 - xi^2)``.  Quadrature panels never straddle a corner.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable

import numpy as np

from .errors import CollisionError, QuadratureError

__all__ = [
    "COLLISION_FLOOR",
    "principal_sqrt",
    "diag_power",
    "Piece",
    "HalfPlaneContour",
    "QuadratureRule",
    "QuadResult",
    "build_contour",
    "gauss_legendre",
    "fixed_rule",
    "integrate",
    "integrate_rule",
    "winding_number",
    "winding_inside",
    "WeightConstant",
    "contour_weight_constant",
    "dump_rule_csv",
]

COLLISION_FLOOR = 1e-13
DEFAULT_ORDER = 16
ROUNDOFF = 50 * np.finfo(float).eps


def principal_sqrt(z):
    """Square root with ``arg z`` taken in ``[-pi, pi)``.

    The result has argument in ``[-pi/2, pi/2)``; in particular ``-1 -> -1j``,
    which differs from :func:`numpy.sqrt` on the negative real axis.  This
    branch is discontinuous there and nowhere else.
    """
    z = np.asarray(z, dtype=complex)
    if np.any(z == 0):
        raise ValueError("principal_sqrt is undefined at 0")
    arg = np.angle(z)
    arg = np.where(arg >= np.pi, arg - 2 * np.pi, arg)
    r = np.sqrt(np.abs(z)) * np.exp(0.5j * arg)
    return r[()] if r.ndim == 0 else r


def diag_power(spectrum, z: complex, exponent, floor: float = COLLISION_FLOOR) -> np.ndarray:
    """Diagonal entries ``(lambda_n - z)^exponent`` for exponent in ``{1/2, -1/2, -1}``.

    Half powers use :func:`principal_sqrt`; ``-1`` is the plain reciprocal.
    """
    lam = getattr(spectrum, "lambdas", spectrum)
    lam = np.asarray(lam, dtype=complex)
    d = lam - z
    if d.size:
        dist = np.min(np.abs(d))
        if dist < floor:
            raise CollisionError(f"z={z} collides with the spectrum (distance {dist:.3e})", z, dist)
    if exponent == 0.5:
        return principal_sqrt(d)
    if exponent == -0.5:
        return 1.0 / principal_sqrt(d)
    if exponent == -1:
        return 1.0 / d
    raise ValueError(f"unsupported exponent {exponent!r}")


@dataclass(frozen=True)
class Piece:
    """Smooth piece of a curve parameterized over ``t in [0, 1]``.

    ``kind="arc"``: ``z = center + radius * exp(i theta)``, theta from ``p0`` to ``p1``.
    ``kind="segment"``: straight line from ``p0`` to ``p1``.
    """

    kind: str
    p0: complex
    p1: complex
    center: complex = 0j
    radius: float = 1.0

    def point(self, t):
        t = np.asarray(t, dtype=float)
        if self.kind == "arc":
            th0, th1 = self.p0.real, self.p1.real
            return self.center + self.radius * np.exp(1j * (th0 + t * (th1 - th0)))
        return self.p0 + t * (self.p1 - self.p0)

    def deriv(self, t):
        t = np.asarray(t, dtype=float)
        if self.kind == "arc":
            th0, th1 = self.p0.real, self.p1.real
            return 1j * self.radius * (th1 - th0) * np.exp(1j * (th0 + t * (th1 - th0)))
        return np.full(t.shape, self.p1 - self.p0, dtype=complex)

    @property
    def length(self) -> float:
        if self.kind == "arc":
            return self.radius * abs(self.p1.real - self.p0.real)
        return abs(self.p1 - self.p0)


@dataclass(frozen=True)
class _ArclengthCurve:
    """Whole closed curve as a single parameter, ignoring its corners.

    Only used to demonstrate what corner splitting buys.
    """

    pieces: tuple
    offset: float

    @property
    def length(self) -> float:
        return sum(p.length for p in self.pieces)

    def _locate(self, t):
        L = self.length
        s = np.mod(np.asarray(t, dtype=float) * L + self.offset, L)
        bounds = np.cumsum([0.0] + [p.length for p in self.pieces])
        idx = np.clip(np.searchsorted(bounds, s, side="right") - 1, 0, len(self.pieces) - 1)
        local = (s - bounds[idx]) / np.array([p.length for p in self.pieces])[idx]
        return idx, local

    def point(self, t):
        idx, local = self._locate(t)
        out = np.empty(local.shape, dtype=complex)
        for i, p in enumerate(self.pieces):
            m = idx == i
            out[m] = p.point(local[m])
        return out

    def deriv(self, t):
        idx, local = self._locate(t)
        L = self.length
        out = np.empty(local.shape, dtype=complex)
        for i, p in enumerate(self.pieces):
            m = idx == i
            out[m] = p.deriv(local[m]) * (L / p.length)
        return out


@dataclass(frozen=True)
class HalfPlaneContour:
    """The positively oriented curve ``gamma_xi^side``."""

    xi: float
    side: str
    pieces: tuple
    corners: tuple
    clearance: float = math.inf
    real_margin: float = math.inf

    @property
    def length(self) -> float:
        return sum(p.length for p in self.pieces)

    @property
    def half_height(self) -> float:
        return math.sqrt(1.0 - self.xi**2)

    def region(self, z):
        """Closed enclosed region ``F`` as a vectorized predicate."""
        z = np.asarray(z, dtype=complex)
        on_side = z.real >= self.xi if self.side == "plus" else z.real <= self.xi
        return on_side & (np.abs(z) <= 1.0)

    def complement(self, z):
        return ~self.region(z)

    def distance(self, mu) -> np.ndarray:
        """Euclidean distance from ``mu`` to the curve."""
        mu = np.asarray(mu, dtype=complex)
        s = self.half_height
        y = np.clip(mu.imag, -s, s)
        d_seg = np.abs(mu - (self.xi + 1j * y))
        th0 = math.acos(self.xi)
        ang = np.angle(mu)
        on_arc = np.abs(ang) <= th0 if self.side == "plus" else np.abs(ang) >= th0
        d_corner = np.minimum(np.abs(mu - self.corners[0]), np.abs(mu - self.corners[1]))
        d_arc = np.where(on_arc, np.abs(np.abs(mu) - 1.0), d_corner)
        return np.minimum(d_seg, d_arc)

    def unsplit(self) -> _ArclengthCurve:
        """Single-parameter version of the curve starting mid-arc (no corner splitting)."""
        arc_len = self.pieces[0].length
        return _ArclengthCurve(self.pieces, 0.5 * arc_len)


def build_contour(spectrum, xi: float, side: str = "plus", margin: float = 1e-6) -> HalfPlaneContour:
    """Construct ``gamma_xi^side`` and record its clearance from the diagonal.

    Raises
    ------
    CollisionError
        If some ``Re(lambda_n)`` lies within ``margin`` of ``xi``.
    """
    if side not in ("plus", "minus"):
        raise ValueError("side must be 'plus' or 'minus'")
    xi = float(xi)
    if not -1.0 < xi < 1.0:
        raise ValueError(f"xi={xi} must lie in (-1, 1)")
    s = math.sqrt(1.0 - xi * xi)
    th0 = math.acos(xi)
    top, bottom = complex(xi, s), complex(xi, -s)
    if side == "plus":
        pieces = (Piece("arc", complex(-th0), complex(th0)), Piece("segment", top, bottom))
    else:
        pieces = (Piece("arc", complex(th0), complex(2 * math.pi - th0)), Piece("segment", bottom, top))
    contour = HalfPlaneContour(xi, side, pieces, (top, bottom))
    lam = getattr(spectrum, "lambdas", spectrum)
    lam = np.asarray(lam, dtype=complex) if lam is not None else np.zeros(0, complex)
    if lam.size:
        real_margin = float(np.min(np.abs(lam.real - xi)))
        if real_margin < margin:
            raise CollisionError(
                f"xi={xi} lies on the real shadow of the spectrum (margin {real_margin:.3e})",
                xi, real_margin)
        clearance = float(np.min(contour.distance(lam)))
        contour = HalfPlaneContour(xi, side, pieces, (top, bottom), clearance, real_margin)
    return contour


@lru_cache(maxsize=16)
def gauss_legendre(order: int):
    x, w = np.polynomial.legendre.leggauss(order)
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


@dataclass
class QuadratureRule:
    """Nodes and complex weights ``dz`` of a composite rule, in curve order."""

    nodes: np.ndarray
    weights: np.ndarray
    panel: np.ndarray
    t: np.ndarray
    order: int = DEFAULT_ORDER
    depth: int = 0
    tol: float = float("nan")
    error: float = float("nan")

    @property
    def size(self) -> int:
        return self.nodes.size


@dataclass
class QuadResult:
    value: np.ndarray
    error: float
    rule: QuadratureRule
    panels: int
    converged: bool = True


def _panel(piece, a, b, order):
    x, w = gauss_legendre(order)
    t = a + (b - a) * (x + 1) / 2
    return t, piece.point(t), piece.deriv(t) * (b - a) / 2 * w


def fixed_rule(contour, depth: int = 0, order: int = DEFAULT_ORDER,
               split_corners: bool = True) -> QuadratureRule:
    """Uniform composite rule with ``2**depth`` panels per smooth piece.

    With ``split_corners=False`` the whole closed curve is one parameter range
    cut into ``2**depth`` equal arclength panels that ignore the corners.
    """
    pieces = contour.pieces if split_corners else (contour.unsplit(),)
    nodes, weights, pid, ts = [], [], [], []
    n = 2**depth
    k = 0
    for piece in pieces:
        for i in range(n):
            t, z, dz = _panel(piece, i / n, (i + 1) / n, order)
            nodes.append(z); weights.append(dz); ts.append(t)
            pid.append(np.full(order, k)); k += 1
    return QuadratureRule(np.concatenate(nodes), np.concatenate(weights), np.concatenate(pid),
                          np.concatenate(ts), order, depth)


def integrate_rule(f: Callable, rule: QuadratureRule, measure: str = "dz"):
    """Apply a precomputed rule: ``sum_i w_i f(z_i)`` in node order."""
    w = rule.weights if measure == "dz" else np.abs(rule.weights)
    vals = np.asarray(f(rule.nodes))
    return np.tensordot(w, vals, axes=(0, 0))


def integrate(f: Callable, contour, tol: float = 1e-12, order: int = DEFAULT_ORDER,
              max_depth: int = 40, min_depth: int = 1, measure: str = "dz",
              raise_on_failure: bool = True) -> QuadResult:
    """Adaptive composite Gauss-Legendre integration over the curve.

    ``f`` maps a 1-D array of nodes to an array whose leading axis runs over the
    nodes (scalar, vector or matrix values per node).  Every panel is compared
    with its two halves; a pair of halves is accepted once the difference is
    below ``tol`` times the panel's share of the total length, or below the
    roundoff floor ``50 eps * int |f| |dz|`` of the two halves.  Accepted panels
    are summed in curve order, so results are reproducible bit for bit.

    Parameters
    ----------
    measure : {"dz", "ds"}
        Complex line element, or arclength ``|dz|``.

    Raises
    ------
    QuadratureError
        When a panel reaches ``max_depth`` without meeting its tolerance; the best
        estimate is attached.
    """
    pieces = contour.pieces
    L = sum(p.length for p in pieces)

    def evaluate(piece, intervals):
        ts, zs, ws = zip(*(_panel(piece, a, b, order) for a, b in intervals))
        z = np.concatenate(zs)
        w = np.concatenate(ws)
        if measure == "ds":
            w = np.abs(w)
        vals = np.asarray(f(z))
        out = []
        for i, (t, zz, ww) in enumerate(zip(ts, zs, ws)):
            sl = slice(i * order, (i + 1) * order)
            ww = w[sl]
            mag = np.tensordot(np.abs(ww), np.abs(vals[sl]), axes=(0, 0))
            out.append((np.tensordot(ww, vals[sl], axes=(0, 0)), t, z[sl], ww,
                        float(np.max(mag, initial=0.0))))
        return out

    leaves = []
    total_err = 0.0
    converged = True
    for pi, piece in enumerate(pieces):
        coarse = evaluate(piece, [(0.0, 1.0)])[0]
        stack = [(0.0, 1.0, 0, coarse)]
        while stack:
            a, b, depth, parent = stack.pop()
            m = 0.5 * (a + b)
            left, right = evaluate(piece, [(a, m), (m, b)])
            fine = left[0] + right[0]
            err = float(np.max(np.abs(fine - parent[0]))) if np.size(fine) else 0.0
            # below the roundoff floor further bisection cannot help
            floor = ROUNDOFF * (left[4] + right[4])
            local_tol = max(tol * piece.length * (b - a) / L, floor)
            if (depth + 1 >= min_depth and err <= local_tol) or depth + 1 >= max_depth:
                if err > local_tol:
                    converged = False
                total_err += err
                leaves.append((pi, a, m, left))
                leaves.append((pi, m, b, right))
            else:
                stack.append((m, b, depth + 1, right))
                stack.append((a, m, depth + 1, left))
    value = np.sum(np.stack([lf[3][0] for lf in leaves]), axis=0)
    rule = QuadratureRule(
        nodes=np.concatenate([lf[3][2] for lf in leaves]),
        weights=np.concatenate([lf[3][3] for lf in leaves]),
        panel=np.repeat(np.arange(len(leaves)), order),
        t=np.concatenate([lf[3][1] for lf in leaves]),
        order=order, depth=max_depth, tol=tol, error=total_err)
    result = QuadResult(value, total_err, rule, len(leaves), converged)
    if not converged and raise_on_failure:
        raise QuadratureError(
            f"adaptive quadrature did not reach tol={tol:g} (estimate {total_err:.3e})",
            estimate=value, error=total_err)
    return result


def winding_number(contour, mu, tol: float = 1e-11) -> np.ndarray:
    """``(1/2 pi i) oint dz / (z - mu)`` for each point ``mu``."""
    mu = np.atleast_1d(np.asarray(mu, dtype=complex))
    res = integrate(lambda z: 1.0 / (z[:, None] - mu[None, :]), contour, tol=tol)
    return res.value / (2j * np.pi)


def winding_inside(contour, mu, floor: float = 1e-8) -> bool:
    """True iff ``mu`` has index one with respect to the curve."""
    d = float(np.min(contour.distance(mu)))
    if d < floor:
        raise CollisionError(f"mu={mu} lies within {d:.2e} of the curve", mu, d)
    w = complex(winding_number(contour, mu)[0])
    return round(w.real) == 1


@dataclass
class WeightConstant:
    """Empirical ``sup |Re(lambda) - xi| * oint |dz| / |lambda - z|^2`` over a grid."""

    value: float
    values: np.ndarray
    argmax: int
    refined_value: float = float("nan")

    @property
    def rel_change(self) -> float:
        return abs(self.refined_value - self.value) / abs(self.refined_value)


def contour_weight_constant(contour, lambdas, tol: float = 1e-9, refine: bool = False) -> WeightConstant:
    """Empirical constant bounding the arclength integral of ``|lambda - z|^-2``.

    With ``refine=True`` the computation is repeated at a thousandth of the
    tolerance and the refined value is stored alongside for comparison.
    """
    lam = np.atleast_1d(np.asarray(lambdas, dtype=complex))
    if lam.size == 0:
        return WeightConstant(0.0, np.zeros(0), -1, 0.0 if refine else float("nan"))
    d = contour.distance(lam)
    if np.min(d) <= 0:
        raise CollisionError("grid point lies on the curve")
    weight = np.abs(lam.real - contour.xi)

    def f(z):
        return weight[None, :] / np.abs(lam[None, :] - z[:, None]) ** 2

    vals = np.real(integrate(f, contour, tol=tol, measure="ds").value)
    i = int(np.argmax(vals))
    out = WeightConstant(float(vals[i]), vals, i)
    if refine:
        fine = np.real(integrate(f, contour, tol=tol * 1e-3, measure="ds").value)
        out.refined_value = float(np.max(fine))
    return out


def dump_rule_csv(rule: QuadratureRule, fh=None) -> str:
    """Write ``panel,t,node_re,node_im,weight_re,weight_im`` rows; returns the text."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["panel", "t", "node_re", "node_im", "weight_re", "weight_im"])
    for p, t, z, dz in zip(rule.panel, rule.t, rule.nodes, rule.weights):
        w.writerow([int(p), repr(float(t)), repr(float(z.real)), repr(float(z.imag)), repr(float(dz.real)), repr(float(dz.imag))])
    text = buf.getvalue()
    if fh is not None:
        fh.write(text)
    return text
