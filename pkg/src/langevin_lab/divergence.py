"""Exact divergences on grid densities and between Gaussian laws.

Grid densities are normalized cell-mass vectors on a regular 1D or 2D
window; divergences between them are computed by direct summation in
log space, which is exact up to quadrature error and safe for large
orders q.  Gaussian laws get the standard closed forms, used both as
oracles for the grid code and as the exact-law substrate for quadratic
targets.

Conventions: all divergences are in nats; Renyi order q > 1; a Renyi
divergence is +inf when absolute continuity fails (mass where the
reference has none).
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.linalg import cholesky, eigh, solve
from scipy.special import logsumexp

from . import rng


class GridMismatchError(ValueError):
    """Operands live on different grids."""


class WindowError(ValueError):
    """Grid window too small: boundary cells carry non-negligible mass."""


@dataclass(frozen=True)
class GridDensity:
    """Normalized density on a regular 1D or 2D grid.

    lo, hi, n describe the window and cell count per axis; values holds
    nonnegative cell masses summing to one, shaped (n,) in 1D and
    (n0, n1) in 2D.  Cell centers are the midpoints of a uniform
    partition of [lo, hi].
    """

    lo: tuple
    hi: tuple
    n: tuple
    values: np.ndarray

    def __post_init__(self):
        v = self.values
        if v.ndim not in (1, 2):
            raise ValueError("only 1D and 2D grids are supported")
        if np.any(v < 0.0):
            raise ValueError("cell masses must be nonnegative")
        total = float(v.sum())
        if not np.isfinite(total) or abs(total - 1.0) > 1e-10:
            raise ValueError(f"cell masses must sum to 1 (got {total!r})")

    @property
    def dims(self) -> int:
        return self.values.ndim

    @property
    def deltas(self) -> tuple:
        return tuple((h - l) / k for l, h, k in zip(self.lo, self.hi, self.n))

    def centers(self, axis: int = 0) -> np.ndarray:
        l, h, k = self.lo[axis], self.hi[axis], self.n[axis]
        dx = (h - l) / k
        return l + dx * (np.arange(k) + 0.5)

    def points(self) -> np.ndarray:
        """Cell centers as an (n_cells, dims) array in C order."""
        if self.dims == 1:
            return self.centers(0)[:, None]
        X, Y = np.meshgrid(self.centers(0), self.centers(1), indexing="ij")
        return np.stack([X.ravel(), Y.ravel()], axis=-1)

    def same_grid(self, other: "GridDensity") -> bool:
        return (self.lo == other.lo and self.hi == other.hi and self.n == other.n)

    def boundary_mass(self) -> float:
        v = self.values
        if self.dims == 1:
            return float(v[0] + v[-1])
        return float(v[0, :].sum() + v[-1, :].sum() + v[1:-1, 0].sum() + v[1:-1, -1].sum())

    def mean(self) -> np.ndarray:
        pts = self.points()
        return pts.T @ self.values.ravel()

    def cov(self) -> np.ndarray:
        pts = self.points()
        w = self.values.ravel()
        m = pts.T @ w
        c = pts - m
        return (c * w[:, None]).T @ c

    def sample(self, n_samples: int, seed: int) -> np.ndarray:
        """Inverse-CDF draw (with in-cell jitter); 1D only."""
        if self.dims != 1:
            raise NotImplementedError("sampling implemented for 1D grids only")
        g = rng.generator(seed, rng.GRID_SAMPLE)
        u = g.random(n_samples)
        cdf = np.cumsum(self.values)
        idx = np.searchsorted(cdf, u, side="right")
        idx = np.clip(idx, 0, self.n[0] - 1)
        jitter = g.random(n_samples) - 0.5
        dx = self.deltas[0]
        return (self.centers(0)[idx] + jitter * dx)[:, None]

    def to_csv(self, path) -> None:
        """Flat CSV: cell index, coordinate(s), mass."""
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            if self.dims == 1:
                w.writerow(["index", "x", "mass"])
                for i, (x, m) in enumerate(zip(self.centers(0), self.values)):
                    w.writerow([i, repr(float(x)), repr(float(m))])
            else:
                w.writerow(["index", "x", "y", "mass"])
                pts = self.points()
                for i, (p, m) in enumerate(zip(pts, self.values.ravel())):
                    w.writerow([i, repr(float(p[0])), repr(float(p[1])), repr(float(m))])

    @staticmethod
    def from_masses(lo, hi, n, masses: np.ndarray) -> "GridDensity":
        lo, hi, n = _as_axes(lo, hi, n)
        masses = np.asarray(masses, dtype=float)
        total = masses.sum()
        if not np.isfinite(total) or total <= 0.0:
            raise ValueError("masses must have a positive finite sum")
        return GridDensity(lo=lo, hi=hi, n=n, values=masses / total)

    @staticmethod
    def from_function(fn, lo, hi, n) -> "GridDensity":
        """Normalize a nonnegative density callable sampled at cell centers."""
        lo, hi, n = _as_axes(lo, hi, n)
        proto = GridDensity(lo=lo, hi=hi, n=n, values=_uniform_values(n))
        vals = fn(proto.points()).reshape(proto.values.shape)
        if np.any(vals < 0.0):
            raise ValueError("density values must be nonnegative")
        return GridDensity.from_masses(lo, hi, n, vals)


def _uniform_values(n):
    shape = n if len(n) > 1 else (n[0],)
    size = int(np.prod(shape))
    return np.full(shape, 1.0 / size)


def _as_axes(lo, hi, n):
    lo = tuple(float(v) for v in np.atleast_1d(lo))
    hi = tuple(float(v) for v in np.atleast_1d(hi))
    n = tuple(int(v) for v in np.atleast_1d(n))
    if not (len(lo) == len(hi) == len(n)) or len(lo) not in (1, 2):
        raise ValueError("lo, hi, n must agree and describe 1 or 2 axes")
    for l, h, k in zip(lo, hi, n):
        if not (h > l and k >= 2):
            raise ValueError("each axis needs hi > lo and n >= 2")
    return lo, hi, n


@dataclass(frozen=True)
class GaussianLaw:
    """Mean vector and symmetric positive-definite covariance."""

    mean: np.ndarray
    cov: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "mean", np.atleast_1d(np.asarray(self.mean, dtype=float)))
        cov = np.atleast_2d(np.asarray(self.cov, dtype=float))
        object.__setattr__(self, "cov", cov)
        if cov.shape != (self.mean.size, self.mean.size):
            raise ValueError("covariance shape does not match mean")
        if not np.allclose(cov, cov.T, atol=1e-10):
            raise ValueError("covariance must be symmetric")
        if np.linalg.eigvalsh(cov)[0] <= 0.0:
            raise ValueError("covariance must be positive-definite")

    @property
    def d(self) -> int:
        return self.mean.size

    @staticmethod
    def isotropic(d: int, var: float, mean=0.0) -> "GaussianLaw":
        m = np.full(d, float(mean)) if np.isscalar(mean) else np.asarray(mean, dtype=float)
        return GaussianLaw(mean=m, cov=var * np.eye(d))

    def density(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        c = x - self.mean
        sol = np.linalg.solve(self.cov, c.reshape(-1, self.d).T).T.reshape(c.shape)
        quad = np.sum(c * sol, axis=-1)
        _, logdet = np.linalg.slogdet(self.cov)
        return np.exp(-0.5 * quad - 0.5 * (self.d * math.log(2.0 * math.pi) + logdet))


@dataclass(frozen=True)
class DivergenceReport:
    """Order, value (nats), and computation method of one divergence."""

    q: float
    value: float
    method: str


def _require_same_grid(mu: GridDensity, pi: GridDensity):
    if not mu.same_grid(pi):
        raise GridMismatchError("operands must live on the same grid")


def renyi_grid(q: float, mu: GridDensity, pi: GridDensity) -> DivergenceReport:
    """R_q(mu || pi) = (1/(q-1)) ln sum (mu_i/pi_i)^q pi_i over cells.

    Computed in log space so large orders do not overflow.  Returns +inf
    when mu carries mass on cells where pi has none.
    """
    if q <= 1.0:
        raise ValueError("Renyi order must satisfy q > 1")
    _require_same_grid(mu, pi)
    mu_v, pi_v = mu.values.ravel(), pi.values.ravel()
    if float(mu_v[pi_v == 0.0].sum()) > 0.0:
        return DivergenceReport(q=q, value=math.inf, method="grid")
    m = mu_v > 0.0
    log_terms = q * np.log(mu_v[m]) - (q - 1.0) * np.log(pi_v[m])
    val = float(logsumexp(log_terms)) / (q - 1.0)
    if val < -1e-9:
        raise AssertionError(f"negative Renyi value {val}: numerical breakdown")
    return DivergenceReport(q=q, value=max(val, 0.0), method="grid")


def kl_grid(mu: GridDensity, pi: GridDensity) -> float:
    _require_same_grid(mu, pi)
    mu_v, pi_v = mu.values.ravel(), pi.values.ravel()
    if float(mu_v[pi_v == 0.0].sum()) > 0.0:
        return math.inf
    m = mu_v > 0.0
    return max(float(np.sum(mu_v[m] * (np.log(mu_v[m]) - np.log(pi_v[m])))), 0.0)


def chi2_grid(mu: GridDensity, pi: GridDensity) -> float:
    _require_same_grid(mu, pi)
    mu_v, pi_v = mu.values.ravel(), pi.values.ravel()
    if float(mu_v[pi_v == 0.0].sum()) > 0.0:
        return math.inf
    m = mu_v > 0.0
    log_sum = logsumexp(2.0 * np.log(mu_v[m]) - np.log(pi_v[m]))
    return max(float(np.expm1(log_sum)), 0.0)


def tv_grid(mu: GridDensity, pi: GridDensity) -> float:
    _require_same_grid(mu, pi)
    return 0.5 * float(np.abs(mu.values - pi.values).sum())


def renyi_gaussian(q: float, g1: GaussianLaw, g2: GaussianLaw) -> DivergenceReport:
    """Closed-form R_q(N(m1, S1) || N(m2, S2)).

    With S_q := q S2 + (1-q) S1 (required positive-definite; +inf
    otherwise, matching the divergent integral),

        R_q = (q/2) (m1-m2)' S_q^{-1} (m1-m2)
              - 1/(2(q-1)) ln[ det S_q / (det S1^{1-q} det S2^q) ].
    """
    if q <= 1.0:
        raise ValueError("Renyi order must satisfy q > 1")
    if g1.d != g2.d:
        raise ValueError("dimension mismatch")
    sig_q = q * g2.cov + (1.0 - q) * g1.cov
    try:
        c = cholesky(sig_q, lower=True)
    except np.linalg.LinAlgError:
        return DivergenceReport(q=q, value=math.inf, method="gaussian_closed_form")
    except ValueError:
        return DivergenceReport(q=q, value=math.inf, method="gaussian_closed_form")
    delta = g1.mean - g2.mean
    quad = 0.5 * q * float(delta @ solve(sig_q, delta, assume_a="pos"))
    logdet_q = 2.0 * float(np.sum(np.log(np.diag(c))))
    _, logdet1 = np.linalg.slogdet(g1.cov)
    _, logdet2 = np.linalg.slogdet(g2.cov)
    log_ratio = logdet_q - (1.0 - q) * logdet1 - q * logdet2
    val = quad - log_ratio / (2.0 * (q - 1.0))
    return DivergenceReport(q=q, value=max(float(val), 0.0), method="gaussian_closed_form")


def kl_gaussian(g1: GaussianLaw, g2: GaussianLaw) -> float:
    """KL(N(m1,S1) || N(m2,S2)) closed form."""
    d = g1.d
    delta = g2.mean - g1.mean
    inv2_s1 = solve(g2.cov, g1.cov, assume_a="pos")
    quad = float(delta @ solve(g2.cov, delta, assume_a="pos"))
    _, logdet1 = np.linalg.slogdet(g1.cov)
    _, logdet2 = np.linalg.slogdet(g2.cov)
    return 0.5 * (np.trace(inv2_s1) + quad - d + logdet2 - logdet1)


def _sqrtm_psd(M: np.ndarray) -> np.ndarray:
    w, U = eigh(M)
    return (U * np.sqrt(np.clip(w, 0.0, None))) @ U.T


def w2_gaussian(g1: GaussianLaw, g2: GaussianLaw) -> float:
    """2-Wasserstein distance between Gaussians (Bures formula)."""
    s2h = _sqrtm_psd(g2.cov)
    cross = _sqrtm_psd(s2h @ g1.cov @ s2h)
    gap = float(np.trace(g1.cov + g2.cov - 2.0 * cross))
    mean_part = float(np.sum((g1.mean - g2.mean) ** 2))
    return math.sqrt(max(mean_part + gap, 0.0))


def tv_gaussian_1d(g1: GaussianLaw, g2: GaussianLaw) -> float:
    """Exact total variation between 1D Gaussians via density crossings."""
    from scipy.stats import norm
    m1, v1 = float(g1.mean[0]), float(g1.cov[0, 0])
    m2, v2 = float(g2.mean[0]), float(g2.cov[0, 0])
    # log density difference is a quadratic a x^2 + b x + c
    a = 0.5 * (1.0 / v2 - 1.0 / v1)
    b = m1 / v1 - m2 / v2
    c = 0.5 * (m2**2 / v2 - m1**2 / v1) + 0.5 * math.log(v2 / v1)
    if abs(a) < 1e-300:
        if abs(b) < 1e-300:
            return 0.0
        roots = [-c / b]
    else:
        disc = b * b - 4.0 * a * c
        if disc <= 0.0:
            roots = []
        else:
            roots = sorted([(-b - math.sqrt(disc)) / (2 * a), (-b + math.sqrt(disc)) / (2 * a)])
    edges = [-math.inf] + list(roots) + [math.inf]
    tv = 0.0
    for left, right in zip(edges[:-1], edges[1:]):
        p1 = norm.cdf(right, m1, math.sqrt(v1)) - norm.cdf(left, m1, math.sqrt(v1))
        p2 = norm.cdf(right, m2, math.sqrt(v2)) - norm.cdf(left, m2, math.sqrt(v2))
        tv += abs(p1 - p2)
    return 0.5 * tv


def check_change_of_measure(mu: GridDensity, nu: GridDensity, event_mask: np.ndarray,
                            slack: float = 1e-12):
    """Check mu(E) <= nu(E) + sqrt(chi2(mu||nu) nu(E)) on the masked event.

    Returns (holds, lhs, rhs).  The inequality is an exact consequence of
    Cauchy-Schwarz, so it must hold up to arithmetic slack.
    """
    _require_same_grid(mu, nu)
    mask = np.asarray(event_mask, dtype=bool).ravel()
    if mask.shape != mu.values.ravel().shape:
        raise GridMismatchError("event mask shape does not match the grid")
    lhs = float(mu.values.ravel()[mask].sum())
    nu_e = float(nu.values.ravel()[mask].sum())
    c2 = chi2_grid(mu, nu)
    rhs = nu_e + math.sqrt(c2 * nu_e) if np.isfinite(c2) else math.inf
    return lhs <= rhs + slack, lhs, rhs


def weak_triangle_coefficient(q: float) -> float:
    """Coefficient (2q-1)/(2q-2) on the R_{2q} term of the weak triangle bound."""
    return (2.0 * q - 1.0) / (2.0 * q - 2.0)


def check_weak_triangle(q: float, mu: GridDensity, nu: GridDensity, pi: GridDensity,
                        slack: float = 1e-9):
    """Check the provable weak triangle inequality

        R_q(mu||pi) <= (2q-1)/(2q-2) R_{2q}(mu||nu) + R_{2q-1}(nu||pi).

    (The Cauchy-Schwarz proof forces the (2q-1)/(2q-2) >= 1 coefficient;
    without it the inequality admits counterexamples.)  Returns
    (holds, lhs, rhs).
    """
    if q < 2.0:
        raise ValueError("weak triangle check expects q >= 2")
    lhs = renyi_grid(q, mu, pi).value
    r_mid = renyi_grid(2.0 * q, mu, nu).value
    r_tail = renyi_grid(2.0 * q - 1.0, nu, pi).value
    rhs = weak_triangle_coefficient(q) * r_mid + r_tail
    holds = (lhs <= rhs + slack) or math.isinf(rhs)
    return holds, lhs, rhs
