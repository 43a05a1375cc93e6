"""Operators of the form ``T = diag(lambda) + sum_k u_k (x) v_k`` at finite truncation.

Conventions
-----------
``alpha[n, k]`` holds the n-th Fourier coefficient of ``u_k`` and ``beta[n, k]``
that of ``v_k``.  The rank-one map ``u (x) v`` sends ``x`` to ``<x, v> u`` with the
inner product linear in the first slot, so the dense matrix is::

    T = diag(lambdas) + alpha @ beta.conj().T

Indices returned by this package are 0-based numpy indices.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .errors import DimensionError, ZeroVectorError

__all__ = [
    "SpectrumSpec",
    "TailBound",
    "CoefficientFamily",
    "PerturbedOperator",
    "GateReport",
    "AffineMap",
    "build_operator",
    "normalize_to_disc",
    "summability_gate",
    "index_set",
    "rotate",
    "adjoint",
]


def _frozen(a, dtype=complex):
    a = np.array(a, dtype=dtype, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class SpectrumSpec:
    """Truncated eigenvalue sequence of the diagonal part.

    ``a`` and ``b`` are the extreme real parts of the declared accumulation set,
    ``a_im`` and ``b_im`` its extreme imaginary parts (needed once the operator
    is rotated by 90 degrees).  Missing extents are taken from the sample itself.
    """

    lambdas: np.ndarray
    a: float = float("nan")
    b: float = float("nan")
    accumulation_declared: bool = False
    normalized: bool = False
    a_im: float = float("nan")
    b_im: float = float("nan")

    def __post_init__(self):
        lam = _frozen(np.atleast_1d(self.lambdas))
        if lam.ndim != 1:
            raise DimensionError("lambdas must be one-dimensional")
        if not np.all(np.isfinite(lam)):
            raise ValueError("lambdas contain non-finite entries")
        object.__setattr__(self, "lambdas", lam)
        for lo, hi, part in (("a", "b", lam.real), ("a_im", "b_im", lam.imag)):
            if np.isnan(getattr(self, lo)) or np.isnan(getattr(self, hi)):
                object.__setattr__(self, lo, float(part.min()) if lam.size else 0.0)
                object.__setattr__(self, hi, float(part.max()) if lam.size else 0.0)
            else:
                object.__setattr__(self, lo, float(getattr(self, lo)))
                object.__setattr__(self, hi, float(getattr(self, hi)))
        if self.accumulation_declared and not self.a < self.b:
            raise ValueError(f"declared accumulation set needs a < b, got a={self.a}, b={self.b}")
        if self.normalized and lam.size and np.max(np.abs(lam)) >= 1.0:
            raise ValueError("normalized spectrum must lie in the open unit disc")

    @property
    def N(self) -> int:
        return self.lambdas.size


class TailBound:
    """Certified bounds on the part of an infinite family beyond the truncation.

    Generators with a closed form subclass this.  Every method returns upper
    bounds for the omitted indices ``n > N`` as a pair ``(alpha_part, beta_part)``;
    ``inf`` certifies divergence.
    """

    def log_condition(self) -> tuple[float, float]:
        """Tail of ``sum |c|^2 log(1 + 1/|c|)``."""
        raise NotImplementedError

    def l2(self) -> tuple[float, float]:
        """Tail of ``sum |c|^2``."""
        raise NotImplementedError

    def sup(self) -> tuple[float, float]:
        """Supremum of ``|c|`` over the omitted coefficients."""
        raise NotImplementedError

    def weighted(self, xi: float) -> tuple[float, float]:
        """Tail of ``sum |c|^2 / |Re(lambda_n) - xi|``."""
        raise NotImplementedError

    def min_distance(self, z: complex) -> float:
        """Lower bound on ``|lambda_n - z|`` over the omitted eigenvalues."""
        raise NotImplementedError

    def borel(self, z: complex, i: int, j: int) -> float:
        """Tail of ``sum |alpha_n^(i) beta_n^(j)| / |lambda_n - z|``."""
        raise NotImplementedError


@dataclass(frozen=True)
class CoefficientFamily:
    """Fourier coefficients of the perturbation vectors, shape ``(N, R)`` each."""

    alpha: np.ndarray
    beta: np.ndarray
    tail_bound: Optional[TailBound] = None
    family: Optional[dict] = None

    def __post_init__(self):
        alpha = _frozen(self.alpha)
        beta = _frozen(self.beta)
        if alpha.ndim == 1:
            alpha = _frozen(alpha[:, None])
        if beta.ndim == 1:
            beta = _frozen(beta[:, None])
        if alpha.ndim != 2 or alpha.shape != beta.shape:
            raise DimensionError(f"alpha {alpha.shape} and beta {beta.shape} must share shape (N, R)")
        if not (np.all(np.isfinite(alpha)) and np.all(np.isfinite(beta))):
            raise ValueError("coefficients contain non-finite entries")
        object.__setattr__(self, "alpha", alpha)
        object.__setattr__(self, "beta", beta)

    @property
    def N(self) -> int:
        return self.alpha.shape[0]

    @property
    def R(self) -> int:
        return self.alpha.shape[1]


@dataclass(frozen=True)
class PerturbedOperator:
    """``T = D_Lambda + sum_k u_k (x) v_k`` at truncation ``(N, R)``."""

    spectrum: SpectrumSpec
    coeffs: CoefficientFamily

    @property
    def N(self) -> int:
        return self.spectrum.N

    @property
    def R(self) -> int:
        return self.coeffs.R

    @property
    def lambdas(self) -> np.ndarray:
        return self.spectrum.lambdas

    @property
    def alpha(self) -> np.ndarray:
        return self.coeffs.alpha

    @property
    def beta(self) -> np.ndarray:
        return self.coeffs.beta

    def apply(self, x):
        x = np.asarray(x, dtype=complex)
        lam = self.lambdas if x.ndim == 1 else self.lambdas[:, None]
        return lam * x + self.alpha @ (self.beta.conj().T @ x)

    def apply_adjoint(self, x):
        x = np.asarray(x, dtype=complex)
        lam = self.lambdas if x.ndim == 1 else self.lambdas[:, None]
        return lam.conj() * x + self.beta @ (self.alpha.conj().T @ x)

    def dense(self) -> np.ndarray:
        return np.diag(self.lambdas) + self.alpha @ self.beta.conj().T

    def norm_estimate(self) -> float:
        """Cheap upper bound on the operator norm."""
        return float(np.max(np.abs(self.lambdas), initial=0.0)
                     + np.linalg.norm(self.alpha, 2) * np.linalg.norm(self.beta, 2))


def build_operator(spectrum: SpectrumSpec, coeffs: CoefficientFamily) -> PerturbedOperator:
    """Validate and bundle an instance.

    Raises
    ------
    DimensionError
        When ``coeffs`` has a different number of rows than ``spectrum``.
    ZeroVectorError
        When some column ``u_k`` or ``v_k`` vanishes.
    """
    if coeffs.N != spectrum.N:
        raise DimensionError(f"spectrum has N={spectrum.N} but coefficients have N={coeffs.N}")
    for name, arr in (("u", coeffs.alpha), ("v", coeffs.beta)):
        zero = np.flatnonzero(~np.any(arr != 0, axis=0))
        if zero.size:
            raise ZeroVectorError(f"{name}_{zero[0] + 1} is the zero vector")
    return PerturbedOperator(spectrum, coeffs)


def rotate(T: PerturbedOperator, factor: complex) -> PerturbedOperator:
    """The operator ``factor * T``.

    For the quarter turns ``+-1j`` and ``-1`` the declared accumulation extents
    are carried over exactly; any other factor falls back to the sample extents.
    """
    factor = complex(factor)
    spec = T.spectrum
    a, b, a_im, b_im = spec.a, spec.b, spec.a_im, spec.b_im
    extents = {
        1: (a, b, a_im, b_im),
        -1: (-b, -a, -b_im, -a_im),
        1j: (-b_im, -a_im, a, b),
        -1j: (a_im, b_im, -b, -a),
    }
    nan = float("nan")
    na, nb, na_im, nb_im = extents.get(factor, (nan, nan, nan, nan))
    declared = spec.accumulation_declared and factor in extents
    lam = factor * spec.lambdas
    new_spec = SpectrumSpec(lam, na, nb, accumulation_declared=declared and na < nb,
                            normalized=bool(lam.size) and bool(np.max(np.abs(lam)) < 1),
                            a_im=na_im, b_im=nb_im)
    return PerturbedOperator(new_spec, CoefficientFamily(factor * T.alpha, T.beta))


def adjoint(T: PerturbedOperator) -> PerturbedOperator:
    """``T*``: conjugated diagonal and swapped coefficient roles."""
    spec = T.spectrum
    new_spec = SpectrumSpec(spec.lambdas.conj(), spec.a, spec.b,
                            accumulation_declared=spec.accumulation_declared,
                            normalized=spec.normalized, a_im=-spec.b_im, b_im=-spec.a_im)
    return PerturbedOperator(new_spec, CoefficientFamily(T.beta, T.alpha))


@dataclass(frozen=True)
class AffineMap:
    """``z -> c*z + d``, recorded so results can be mapped back."""

    c: float = 1.0
    d: complex = 0.0

    def __call__(self, z):
        return self.c * np.asarray(z) + self.d

    def inverse(self, w):
        return (np.asarray(w) - self.d) / self.c

    @property
    def is_identity(self) -> bool:
        return self.c == 1.0 and self.d == 0


def normalize_to_disc(T: PerturbedOperator, margin: float = 0.05) -> tuple[PerturbedOperator, AffineMap]:
    """Shift and scale ``T`` so that its diagonal and dense spectrum sit in the unit disc.

    The returned operator has ``|lambda_n| <= 1 - margin`` and every eigenvalue of
    the dense matrix within ``1 - margin/2`` of the origin.  An instance that
    already satisfies both is returned unchanged with the identity map.
    """
    if not 0 < margin < 1:
        raise ValueError("margin must lie in (0, 1)")
    lam = T.lambdas
    mu = np.linalg.eigvals(T.dense()) if T.N else np.zeros(0)
    if (np.max(np.abs(lam), initial=0.0) <= 1 - margin
            and np.max(np.abs(mu), initial=0.0) <= 1 - margin / 2):
        return T, AffineMap()
    center = 0.5 * (lam.real.min() + lam.real.max()) + 0.5j * (lam.imag.min() + lam.imag.max())
    r_lam = np.max(np.abs(lam - center))
    r_mu = np.max(np.abs(mu - center))
    c = (1 - margin) / r_lam if r_lam > 0 else 1.0
    if r_mu > 0:
        c = min(c, (1 - margin / 2) / r_mu)
    amap = AffineMap(float(c), complex(-c * center))
    new_lam = amap(lam)
    spec = T.spectrum
    new_spec = SpectrumSpec(new_lam, c * (spec.a - center.real), c * (spec.b - center.real),
                            accumulation_declared=spec.accumulation_declared, normalized=True,
                            a_im=c * (spec.a_im - center.imag), b_im=c * (spec.b_im - center.imag))
    # the constant shift only touches the diagonal; the rank-R part scales by c
    return PerturbedOperator(new_spec, CoefficientFamily(c * T.alpha, T.beta)), amap


@dataclass(frozen=True)
class GateReport:
    """Outcome of the summability gate on a coefficient family."""

    log_sum_alpha: float
    log_sum_beta: float
    l2_sum: float
    log_sum_plain: float
    tail: Optional[float]
    threshold: float
    verdict: str
    exceptional_u: tuple = ()
    exceptional_v: tuple = ()
    sup_outside: float = 0.0

    @property
    def accepted(self) -> bool:
        return self.verdict == "accept"

    @property
    def certified(self) -> bool:
        return self.tail is not None

    def to_dict(self) -> dict:
        return {
            "log_sum_alpha": self.log_sum_alpha,
            "log_sum_beta": self.log_sum_beta,
            "l2_sum": self.l2_sum,
            "log_sum_plain": self.log_sum_plain,
            "tail": "uncertified" if self.tail is None else self.tail,
            "threshold": self.threshold,
            "verdict": self.verdict,
            "exceptional_u": [list(p) for p in self.exceptional_u],
            "exceptional_v": [list(p) for p in self.exceptional_v],
            "sup_outside": self.sup_outside,
        }


def _xlog(c, with_one=True):
    m = np.abs(c)
    m = m[m != 0]
    if with_one:
        return float(np.sum(m**2 * np.log1p(1.0 / m)))
    return float(np.sum(m**2 * np.log(1.0 / m)))


def summability_gate(coeffs: CoefficientFamily, threshold: float = 1e6,
                     require_certified: bool = False) -> GateReport:
    """Evaluate the log-weighted square summability condition.

    Partial sums run over the stored truncation; the generator-supplied tail
    bound (if any) is added.  The plain l2 sum and the ``|c|^2 log(1/|c|)`` sum
    are reported alongside.

    Parameters
    ----------
    coeffs : CoefficientFamily
    threshold : float
        Acceptance requires partial sum plus tail to stay below this value.
    require_certified : bool
        If set, a family without a tail bound gets the verdict ``"uncertified"``.
    """
    if not threshold > 0:
        raise ValueError("threshold must be positive")
    alpha, beta = coeffs.alpha, coeffs.beta
    la, lb = _xlog(alpha), _xlog(beta)
    l2 = float(np.sum(np.abs(alpha) ** 2) + np.sum(np.abs(beta) ** 2))
    plain = _xlog(alpha, False) + _xlog(beta, False)

    exc_u = tuple((int(n), int(k)) for n, k in np.argwhere(np.abs(alpha) >= 1))
    exc_v = tuple((int(n), int(k)) for n, k in np.argwhere(np.abs(beta) >= 1))
    inside = np.concatenate([np.abs(alpha)[np.abs(alpha) < 1], np.abs(beta)[np.abs(beta) < 1]])
    sup_out = float(inside.max(initial=0.0))

    tb = coeffs.tail_bound
    tail = None
    if tb is not None:
        ta, tbeta = tb.log_condition()
        tail = float(ta + tbeta)
        sup_out = max(sup_out, *tb.sup())

    if tail is None and require_certified:
        verdict = "uncertified"
    else:
        total = la + lb + (tail or 0.0)
        verdict = "accept" if (total < threshold and sup_out < 1) else "reject"
    return GateReport(la, lb, l2, plain, tail, threshold, verdict, exc_u, exc_v, sup_out)


def index_set(spectrum, region: Callable) -> np.ndarray:
    """0-based indices ``n`` with ``lambda_n`` inside ``region``.

    ``region`` is any vectorized predicate on complex arrays (half-planes,
    rectangles and discs from :mod:`specidem.oracle` qualify).
    """
    lam = spectrum.lambdas if hasattr(spectrum, "lambdas") else np.asarray(spectrum)
    if lam.size == 0:
        return np.zeros(0, dtype=int)
    mask = np.asarray(region(lam), dtype=bool)
    return np.flatnonzero(mask)
