"""Instance generators.

Closed-form families (``geometric``, ``power``) come with certified tail bounds
for everything beyond the truncation.  ``random_instance`` draws desk-scale test
problems whose spectrum leaves a vertical gap at a prescribed abscissa.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .model import CoefficientFamily, PerturbedOperator, SpectrumSpec, TailBound, build_operator

__all__ = [
    "GOLDEN",
    "alternating_spectrum",
    "family_instance",
    "geometric_family",
    "power_family",
    "random_instance",
    "clustered_divergent_instance",
    "two_gap_instance",
    "find_rectangle",
]

GOLDEN = (math.sqrt(5) - 1) / 2


def alternating_spectrum(N: int, h: float = 0.5, amp: float = 0.3) -> SpectrumSpec:
    """``lambda_n = (-1)^(n+1) h + i y_n`` with distinct low-discrepancy ``y_n``.

    The real parts are exactly ``+-h``; with ``amp=0`` the spectrum is the bare
    alternating sequence.  Accumulation extents: ``Re in [-h, h]``,
    ``Im in [-amp, amp]``.
    """
    n = np.arange(1, N + 1)
    sign = np.where(n % 2 == 1, 1.0, -1.0)
    y = amp * (2 * ((n * GOLDEN) % 1.0) - 1)
    lam = sign * h + 1j * y
    return SpectrumSpec(lam, -h, h, accumulation_declared=True,
                        normalized=bool(np.max(np.abs(lam)) < 1),
                        a_im=-amp, b_im=amp)


def _geom_sums(q: float, N: int) -> tuple[float, float]:
    """``sum_{n>N} q^n`` and ``sum_{n>N} n q^n``."""
    s0 = q ** (N + 1) / (1 - q)
    s1 = q ** (N + 1) * ((N + 1) - N * q) / (1 - q) ** 2
    return s0, s1


@dataclass(frozen=True)
class _Column:
    """Closed form of one coefficient column: ``c_n = scale * ratio^n`` or ``scale * n^-p``."""

    kind: str
    scale: float
    param: float  # ratio for geometric, exponent p for power

    def value(self, n):
        if self.kind == "geometric":
            return self.scale * self.param ** n
        return self.scale * n ** (-self.param)

    def l2_tail(self, N: int) -> float:
        s = self.scale
        if self.kind == "geometric":
            return s * s * _geom_sums(self.param**2, N)[0]
        p2 = 2 * self.param
        if p2 <= 1:
            return math.inf
        return s * s * N ** (1 - p2) / (p2 - 1)

    def log_tail(self, N: int) -> float:
        # |c|^2 log(1 + 1/|c|) is increasing in |c|; bound log(1 + 1/c_n) by
        # log(1 + 1/s) + n log(1/r)  (geometric)  or  log(1 + 1/s) + p log n  (power)
        s = self.scale
        c0 = math.log1p(1.0 / s)
        if self.kind == "geometric":
            s0, s1 = _geom_sums(self.param**2, N)
            return s * s * (c0 * s0 + math.log(1.0 / self.param) * s1)
        p = self.param
        if 2 * p <= 1:
            return math.inf  # terms dominate s^2 log(1+1/s) n^{-2p}, not summable
        f = lambda x: x ** (-2 * p) * (c0 + p * math.log(x))
        # f decreases once c0 + p log x > 1/2
        n1 = max(N, int(math.ceil(math.exp(max(0.5 - c0, 0.0) / p))) + 1)
        head = sum(f(n) for n in range(N + 1, n1 + 1))
        s_ = 2 * p
        integral = n1 ** (1 - s_) / (s_ - 1) * (c0 + p * math.log(n1) + p / (s_ - 1))
        return s * s * (head + integral)

    def sup_tail(self, N: int) -> float:
        return float(self.value(N + 1))


class FamilyTail(TailBound):
    """Tail bound for columns with closed forms over an alternating spectrum."""

    def __init__(self, alpha_cols, beta_cols, N: int, h: float, amp: float):
        self.alpha_cols = tuple(alpha_cols)
        self.beta_cols = tuple(beta_cols)
        self.N = N
        self.h = h
        self.amp = amp

    def _pair(self, fn):
        return (float(sum(fn(c) for c in self.alpha_cols)),
                float(sum(fn(c) for c in self.beta_cols)))

    def log_condition(self):
        return self._pair(lambda c: c.log_tail(self.N))

    def l2(self):
        return self._pair(lambda c: c.l2_tail(self.N))

    def sup(self):
        return (max(c.sup_tail(self.N) for c in self.alpha_cols),
                max(c.sup_tail(self.N) for c in self.beta_cols))

    def _real_gap(self, x: float) -> float:
        return min(abs(self.h - x), abs(-self.h - x))

    def weighted(self, xi):
        gap = self._real_gap(xi)
        la, lb = self.l2()
        if gap == 0:
            return (math.inf if la else 0.0, math.inf if lb else 0.0)
        return la / gap, lb / gap

    def min_distance(self, z):
        # omitted eigenvalues lie on the two vertical segments Re = +-h, |Im| <= amp
        d = []
        for re in (self.h, -self.h):
            y = min(max(z.imag, -self.amp), self.amp)
            d.append(abs(complex(re, y) - z))
        return min(d)

    def borel(self, z, i, j):
        dist = self.min_distance(complex(z))
        ta = self.alpha_cols[i].l2_tail(self.N)
        tb = self.beta_cols[j].l2_tail(self.N)
        if dist == 0:
            return math.inf
        return math.sqrt(ta * tb) / dist


def _columns(kind, R, scale, param, decay):
    return [_Column(kind, scale * decay**k, param) for k in range(R)]


def family_instance(kind: str, N: int, R: int = 1, *, scale: float = 1.0,
                    param: float | None = None, beta_scale: float | None = None,
                    beta_param: float | None = None, column_decay: float = 0.5,
                    h: float = 0.5, amp: float = 0.3) -> PerturbedOperator:
    """Closed-form family over :func:`alternating_spectrum` with certified tails.

    Column ``k`` (0-based) of ``alpha`` is ``scale * decay^k * ratio^n`` for
    ``kind="geometric"`` (``param`` = ratio, default 1/2) or
    ``scale * decay^k * n^-p`` for ``kind="power"`` (``param`` = p, default 1).
    ``beta`` uses the same law unless ``beta_scale``/``beta_param`` override it.
    """
    if kind not in ("geometric", "power"):
        raise ValueError(f"unknown family kind {kind!r}")
    if param is None:
        param = 0.5 if kind == "geometric" else 1.0
    beta_scale = scale if beta_scale is None else beta_scale
    beta_param = param if beta_param is None else beta_param
    acols = _columns(kind, R, scale, param, column_decay)
    bcols = _columns(kind, R, beta_scale, beta_param, column_decay)
    n = np.arange(1, N + 1, dtype=float)
    alpha = np.stack([c.value(n) for c in acols], axis=1).astype(complex)
    beta = np.stack([c.value(n) for c in bcols], axis=1).astype(complex)
    tail = FamilyTail(acols, bcols, N, h, amp)
    params = dict(N=N, R=R, scale=scale, param=param, beta_scale=beta_scale,
                  beta_param=beta_param, column_decay=column_decay, h=h, amp=amp)
    coeffs = CoefficientFamily(alpha, beta, tail_bound=tail, family={"kind": kind, "params": params})
    return build_operator(alternating_spectrum(N, h, amp), coeffs)


def geometric_family(N: int, R: int = 1, ratio: float = 0.5, **kw) -> PerturbedOperator:
    return family_instance("geometric", N, R, param=ratio, **kw)


def power_family(N: int, R: int = 1, p: float = 1.0, **kw) -> PerturbedOperator:
    return family_instance("power", N, R, param=p, **kw)


def _disc_sample(rng, n, radius):
    r = radius * np.sqrt(rng.uniform(size=n))
    th = rng.uniform(0, 2 * np.pi, size=n)
    return r * np.exp(1j * th)


def _min_gap(z):
    if z.size < 2:
        return math.inf
    d = np.abs(z[:, None] - z[None, :])
    d[np.diag_indices_from(d)] = np.inf
    return float(d.min())


def random_instance(N: int, R: int, seed: int, *, xi: float | None = None,
                    radius: float = 0.85, mu_radius: float = 0.9, coef_scale: float = 0.25,
                    strip: float = 0.12, clearance: float = 0.05, min_gap: float = 1e-4,
                    two_sided: bool = True, max_tries: int = 500) -> tuple[PerturbedOperator, float]:
    """Random instance with a spectral gap around a vertical line.

    The diagonal is drawn uniformly from the disc of ``radius`` outside the strip
    ``|Re z - xi| < strip``; coefficients are complex Gaussian with column norms
    near ``coef_scale``.  Draws are repeated until the dense eigenvalues lie in
    the disc of ``mu_radius``, keep ``clearance`` from the line in real part, and
    are separated by at least ``min_gap``; with ``two_sided`` both sides of the
    line must hold eigenvalues.  The accumulation set is declared to
    be the closed disc of radius ``mu_radius``.

    Returns
    -------
    (T, xi)
    """
    rng = np.random.default_rng(seed)
    if xi is None:
        xi = float(rng.uniform(-0.4, 0.4))
    for _ in range(max_tries):
        lam = np.zeros(0, dtype=complex)
        while lam.size < N:
            z = _disc_sample(rng, 2 * N, radius)
            lam = np.concatenate([lam, z[np.abs(z.real - xi) >= strip]])
        lam = lam[:N]
        shape = (N, R)
        alpha = (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) * coef_scale / math.sqrt(2 * N)
        beta = (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) * coef_scale / math.sqrt(2 * N)
        dense = np.diag(lam) + alpha @ beta.conj().T
        mu = np.linalg.eigvals(dense)
        if (np.max(np.abs(mu)) <= mu_radius
                and np.min(np.abs(mu.real - xi)) >= clearance
                and _min_gap(mu) >= min_gap and _min_gap(lam) >= min_gap
                and (not two_sided or 0 < np.sum(mu.real > xi) < N)):
            spec = SpectrumSpec(lam, -mu_radius, mu_radius, accumulation_declared=True,
                                normalized=True, a_im=-mu_radius, b_im=mu_radius)
            fam = {"kind": "random", "params": dict(N=N, R=R, seed=seed, xi=xi)}
            return build_operator(spec, CoefficientFamily(alpha, beta, family=fam)), float(xi)
    raise RuntimeError(f"no admissible instance after {max_tries} draws (N={N}, R={R}, seed={seed})")


def clustered_divergent_instance(N: int, xi0: float = 0.1, scale: float = 0.05,
                                 amp: float = 0.4) -> PerturbedOperator:
    """``alpha_n = beta_n = scale / sqrt(n)`` with ``Re(lambda_n) -> xi0``.

    The real parts approach ``xi0`` like ``(-1)^n / n^2`` so the weighted sums
    ``sum |alpha_n|^2 / |Re(lambda_n) - xi|`` blow up near ``xi0`` only.
    """
    n = np.arange(1, N + 1)
    re = xi0 + (-1.0) ** n * 0.5 / n**2
    im = amp * (2 * ((n * GOLDEN) % 1.0) - 1)
    lam = re + 1j * im
    c = (scale / np.sqrt(n)).astype(complex)[:, None]
    spec = SpectrumSpec(lam, -0.9, 0.9, accumulation_declared=True, normalized=True,
                        a_im=-0.9, b_im=0.9)
    return build_operator(spec, CoefficientFamily(c, c.copy(), family={"kind": "clustered", "params": dict(N=N, xi0=xi0)}))


def two_gap_instance(grid, keep: tuple[float, float], width: float,
                     scale: float = 0.02, amp: float = 0.5) -> PerturbedOperator:
    """Diagonal with a real part on every grid abscissa except near ``keep``.

    At every grid abscissa farther than ``width`` from both kept points some
    ``Re(lambda_n)`` coincides with it, so the weighted sums there are infinite;
    only pairs drawn from the two gaps can pass the local two-point condition.
    """
    grid = np.asarray(grid, dtype=float)
    far = np.min(np.abs(grid[:, None] - np.asarray(keep)[None, :]), axis=1) > width
    re = grid[far]
    n = np.arange(1, re.size + 1)
    im = amp * (2 * ((n * GOLDEN) % 1.0) - 1)
    lam = re + 1j * im
    rng = np.random.default_rng(12345)
    alpha = (scale * (rng.standard_normal((re.size, 1)) + 1j * rng.standard_normal((re.size, 1)))
             / math.sqrt(re.size))
    beta = (scale * (rng.standard_normal((re.size, 1)) + 1j * rng.standard_normal((re.size, 1)))
            / math.sqrt(re.size))
    spec = SpectrumSpec(lam, float(grid.min()) - 1e-3, float(grid.max()) + 1e-3,
                        accumulation_declared=True, normalized=True, a_im=-0.9, b_im=0.9)
    return build_operator(spec, CoefficientFamily(alpha, beta))


def find_rectangle(T: PerturbedOperator, count: int, clearance: float = 0.02,
                   mu=None, seed: int = 0, bound: float = 0.895):
    """Search for an axis-parallel rectangle holding exactly ``count`` eigenvalues.

    Edges are placed at midpoints of gaps between the sorted real (imaginary)
    parts of the diagonal and of the dense eigenvalues, and every edge keeps at
    least ``clearance`` from all of them.  Returns ``(x1, x2, y1, y2)`` or ``None``.
    """
    if mu is None:
        mu = np.linalg.eigvals(T.dense())
    pts = np.concatenate([T.lambdas, mu])

    def cuts(vals, lo, hi):
        v = np.sort(np.concatenate([vals, [lo, hi]]))
        mids = 0.5 * (v[1:] + v[:-1])
        ok = (v[1:] - v[:-1]) >= 2 * clearance
        return mids[ok]

    xs = cuts(pts.real, -bound, bound)
    ys = cuts(pts.imag, -bound, bound)
    rng = np.random.default_rng(seed)
    pairs = [(x1, x2, y1, y2) for i, x1 in enumerate(xs) for x2 in xs[i + 1:]
             for j, y1 in enumerate(ys) for y2 in ys[j + 1:]]
    rng.shuffle(pairs)
    for x1, x2, y1, y2 in pairs:
        inside = (mu.real > x1) & (mu.real < x2) & (mu.imag > y1) & (mu.imag < y2)
        if inside.sum() == count:
            return float(x1), float(x2), float(y1), float(y2)
    return None
